from hypothesis import settings

settings.register_profile("qftlab", deadline=None, max_examples=50)
settings.load_profile("qftlab")

# criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0].rstrip("."))):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
