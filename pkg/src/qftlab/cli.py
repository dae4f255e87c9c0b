"""qftlab command line: verify | solve | separation | dump-operator.

Exit codes: 0 every assertion passed, 1 an assertion failed, 2 usage error.
Settings come from flags, then a JSON --config file, then defaults; the
default seed is read from QFTLAB_SEED.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, ParseError, PreconditionError, QftlabError
from .fields import (
    MAX_PRIME,
    is_prime,
    FieldSpec,
    LinearFunctional,
    MatrixRingSpec,
    field_basis,
    matrix_left_hom,
    matrix_right_hom,
    mul_hom,
    verify_character_completeness,
)
from .groups import (
    DEFAULT_DENSE_CAP,
    DEFAULT_TOL,
    GroupSpec,
    check_compatibility,
    check_pair_compatibility,
    diagonal_hom,
    verify_homomorphism,
    verify_orthogonality,
)
from .hidden import BlackBox, run_quantum, run_separation_experiment
from .parsing import (
    format_element,
    group_of,
    natural_basis,
    parse_element,
    parse_target,
    target_json,
)
from .sim import (
    a_psi,
    b_psi,
    complex_pairs,
    inversion_residual,
    permutation_op,
    qft,
    translation_op,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(QftlabError):
    pass


@dataclass
class RunConfig:
    command: str
    target: str | None = None
    seed: int = 0
    trials: int = 10_000
    budgets: list[int] | None = None
    orders: list[int] = field(default_factory=lambda: [31, 101, 257])
    format: str = "table"
    tolerance: float = DEFAULT_TOL
    cap: int = DEFAULT_DENSE_CAP
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    quantum_trials: int = 100
    max_homs: int = 64
    functionals: int = 0
    s: str | None = None
    a: str | None = None
    random: bool = False
    audit: bool = False
    op: str = "qft"
    x: str | None = None
    perm: list[int] | None = None
    output: str | None = None


CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}


# -- output helpers ----------------------------------------------------------------


def fmt_float(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def dumps(obj) -> str:
    """JSON with floats at 17 significant digits; non-finite floats become null."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj)) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def render(rows: list[dict], fmt: str, meta: dict | None = None) -> str:
    meta = meta or {}
    if fmt == "json":
        return dumps({**meta, "rows": rows}) + "\n"
    cols = list(rows[0]) if rows else []

    def cell(v):
        if isinstance(v, float):
            return fmt_float(v)
        return "" if v is None else str(v)

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([cell(r[c]) for c in cols])
        return buf.getvalue()
    text = [[c for c in cols]] + [[cell(r[c]) if not isinstance(r[c], float) else f"{r[c]:.6g}"
                                   for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in text) for i in range(len(cols))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in text]
    head = [f"# {k}: {v}" for k, v in meta.items()]
    return "\n".join(head + lines) + "\n"


# -- verify ------------------------------------------------------------------------


def _sampled(items: list, limit: int, rng) -> list:
    if len(items) <= limit:
        return items
    pick = np.sort(rng.choice(len(items), size=limit, replace=False))
    return [items[i] for i in pick]


def verify_suite(target, cfg: RunConfig) -> list[dict]:
    """Character, homomorphism and inversion checks for every structured psi."""
    tol, cap = cfg.tolerance, cfg.cap
    g = group_of(target)
    rng = np.random.default_rng(cfg.seed)
    rows = []

    def add(check, subject, value, ok):
        rows.append({"check": check, "subject": subject, "value": value,
                     "tolerance": tol if isinstance(value, float) else None,
                     "status": "pass" if ok else "FAIL"})

    bases = [natural_basis(target)]
    if isinstance(target, FieldSpec):
        bases += [field_basis(target, LinearFunctional.random(target, rng))
                  for _ in range(cfg.functionals)]
    bases = [dataclasses.replace(b, tolerance=tol) for b in bases]

    for basis in bases:
        dev = verify_orthogonality(basis, cap)
        add("orthogonality", basis.name, dev, dev <= tol)
        if isinstance(target, FieldSpec):
            add("completeness", basis.name, None, verify_character_completeness(basis, cap))

    elements = list(g.elements())
    fmt = lambda x: format_element(target, x)  # noqa: E731
    if isinstance(target, MatrixRingSpec):
        basis = bases[0]
        for s in _sampled(elements, cfg.max_homs, rng):
            left, right = matrix_left_hom(target, s), matrix_right_hom(target, s)
            pair = check_pair_compatibility(basis, left, right, cap)
            add("pair_compatibility", f"S={fmt(s)}", None, pair.ok)
            if pair.ok:
                r = inversion_residual(basis, left, right, cap=cap)
                add("inversion_pair", f"S={fmt(s)}", r, r <= tol)
        return rows

    for basis in bases:
        for s in _sampled(elements, cfg.max_homs, rng):
            psi = mul_hom(target, s) if isinstance(target, FieldSpec) else diagonal_hom(g, s)
            label = f"s={fmt(s)}" + ("" if basis is bases[0] else f" [{basis.name}]")
            hom = verify_homomorphism(psi, cap=cap)
            add("homomorphism", label, None, hom.ok)
            compat = check_compatibility(basis, psi, cap)
            add("compatibility", label, None, compat.ok)
            if compat.ok:
                r = inversion_residual(basis, psi, psi, cap=cap)
                add("inversion", label, r, r <= tol)
    return rows


def cmd_verify(cfg: RunConfig, out) -> int:
    target = parse_target(cfg.target)
    rows = verify_suite(target, cfg)
    residuals = [r["value"] for r in rows if r["check"].startswith("inversion")]
    failed = sum(r["status"] != "pass" for r in rows)
    meta = {"target": str(target), "seed": cfg.seed, "checks": len(rows), "failed": failed,
            "max_residual": max(residuals) if residuals else 0.0}
    out.write(render(rows, cfg.format, meta))
    return EXIT_OK if failed == 0 else EXIT_FAIL


# -- solve ---------------------------------------------------------------------------


def _default_a(target):
    if isinstance(target, FieldSpec):
        return target.one
    return (1,) * target.rank


def cmd_solve(cfg: RunConfig, out) -> int:
    target = parse_target(cfg.target)
    if isinstance(target, MatrixRingSpec):
        raise UsageError("solve needs a group or field; matrix rings only have compatible pairs")
    g = group_of(target)
    rng = np.random.default_rng(cfg.seed)
    if cfg.random:
        s = g.element_of(int(rng.integers(g.order)))
    elif cfg.s is not None:
        s = parse_element(target, cfg.s)
    else:
        raise UsageError("solve needs --s or --random")
    a = parse_element(target, cfg.a) if cfg.a is not None else _default_a(target)
    psi = mul_hom(target, s) if isinstance(target, FieldSpec) else diagonal_hom(g, s)
    basis = dataclasses.replace(natural_basis(target), tolerance=cfg.tolerance)
    compat = check_compatibility(basis, psi, cfg.cap)
    if not compat:
        raise PreconditionError(f"psi is incompatible with the basis; witness {compat.witness}")
    box = BlackBox(psi, rng.permutation(g.order), seed=cfg.seed)
    run = run_quantum(box, basis, a)
    row = {"target": str(target), "a": format_element(target, a),
           "psi_a": format_element(target, run.value), "probability": run.probability,
           "queries": run.queries, "seed": cfg.seed}
    ok = run.queries == 1
    if cfg.audit:
        expected = psi(a)
        row.update({"s": format_element(target, s), "expected": format_element(target, expected),
                    "match": expected == run.value})
        ok = ok and expected == run.value
    if cfg.format == "table":
        out.write(f"psi(a)={row['psi_a']}, queries={row['queries']}\n")
        extra = {k: v for k, v in row.items() if k not in ("psi_a", "queries")}
        out.write("".join(f"# {k}: {fmt_float(v) if isinstance(v, float) else v}\n"
                          for k, v in extra.items()))
    else:
        out.write(render([row], cfg.format))
    return EXIT_OK if ok else EXIT_FAIL


# -- separation ------------------------------------------------------------------------

SEPARATION_COLUMNS = ["n", "m", "trials", "collision_rate", "stderr", "paper_bound", "threshold",
                      "quantum_queries", "quantum_correct_rate", "seed", "guess_success"]


def cmd_separation(cfg: RunConfig, out) -> int:
    bad = [n for n in cfg.orders if not (2 <= n <= MAX_PRIME and is_prime(n))]
    if bad:
        raise UsageError(f"separation needs prime orders; refused {bad}")
    reports = run_separation_experiment(cfg.orders, trials=cfg.trials, budgets=cfg.budgets,
                                        seed=cfg.seed, quantum_trials=cfg.quantum_trials,
                                        workers=cfg.workers, audit=cfg.audit)
    rows = [{c: r.row()[c] for c in SEPARATION_COLUMNS} for r in reports]
    if cfg.format == "json":
        payload = {"seed": cfg.seed, "rows": rows}
        if cfg.audit:
            payload["audit"] = [{"n": r.n, "m": r.m, "mismatches": r.audit_mismatches,
                                 "trials": r.audit} for r in reports]
        out.write(dumps(payload) + "\n")
    else:
        out.write(render(rows, cfg.format, {"seed": cfg.seed} if cfg.format == "table" else None))
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


# -- dump-operator ------------------------------------------------------------------------

OPERATORS = ("qft", "qft_adj", "translation", "a_psi", "b_psi", "permutation")


def cmd_dump_operator(cfg: RunConfig, out) -> int:
    target = parse_target(cfg.target)
    g = group_of(target)
    g.require_dense(cfg.cap, "dump-operator")
    op = cfg.op
    if op in ("qft", "qft_adj"):
        f = qft(natural_basis(target), cfg.cap)
        matrix = f.to_dense() if op == "qft" else f.adjoint().to_dense()
    elif op == "translation":
        matrix = translation_op(g, parse_element(target, cfg.x or "0")).to_dense()
    elif op in ("a_psi", "b_psi"):
        if cfg.s is None:
            raise UsageError(f"{op} needs --s")
        s = parse_element(target, cfg.s)
        if isinstance(target, FieldSpec):
            psi = mul_hom(target, s)
        elif isinstance(target, MatrixRingSpec):
            psi = matrix_left_hom(target, s) if op == "a_psi" else matrix_right_hom(target, s)
        else:
            psi = diagonal_hom(g, s)
        matrix = (a_psi(psi) if op == "a_psi" else b_psi(psi)).to_dense()
    elif op == "permutation":
        perm = cfg.perm if cfg.perm is not None else np.random.default_rng(cfg.seed).permutation(g.order)
        matrix = permutation_op(g, perm).to_dense()
    else:
        raise UsageError(f"unknown operator {op!r}; choose from {', '.join(OPERATORS)}")
    payload = {"target": target_json(target), "op": op, "dim": matrix.shape[0], "seed": cfg.seed,
               "matrix": complex_pairs(matrix)}
    text = dumps(payload) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "solve": cmd_solve, "separation": cmd_separation,
            "dump-operator": cmd_dump_operator}


# -- argument handling -------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="64-bit seed (default $QFTLAB_SEED or 0)")
    common.add_argument("--format", choices=("table", "csv", "json"))
    common.add_argument("--tol", dest="tolerance", type=float, help="comparison tolerance")
    common.add_argument("--cap", type=int, help="dense-construction cap on |G|")
    common.add_argument("--config", help="JSON config file")

    parser = argparse.ArgumentParser(prog="qftlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the character/inversion suite")
    p.add_argument("target", nargs="?")
    p.add_argument("--max-homs", type=int, help="sample at most this many homomorphisms")
    p.add_argument("--functionals", type=int, help="extra random functionals (fields)")

    p = sub.add_parser("solve", parents=[common], help="one-query quantum solver")
    p.add_argument("target", nargs="?")
    p.add_argument("--s", help="hidden multiplier s")
    p.add_argument("--a", help="element a whose image is wanted")
    p.add_argument("--random", action="store_true", default=None)
    p.add_argument("--audit", action="store_true", default=None)

    p = sub.add_parser("separation", parents=[common], help="classical collision experiment")
    p.add_argument("--orders", type=_int_list)
    p.add_argument("--trials", type=int)
    p.add_argument("--budgets", type=_int_list)
    p.add_argument("--quantum-trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--audit", action="store_true", default=None)

    p = sub.add_parser("dump-operator", parents=[common], help="emit a dense operator as JSON")
    p.add_argument("target", nargs="?")
    p.add_argument("--op", choices=OPERATORS)
    p.add_argument("--s")
    p.add_argument("--x")
    p.add_argument("--perm", type=_int_list)
    p.add_argument("--output")
    return parser


def resolve_config(args: argparse.Namespace, env=os.environ) -> RunConfig:
    """flags > config file > defaults (with $QFTLAB_SEED as the default seed)."""
    values = {}
    if env.get("QFTLAB_SEED"):
        try:
            values["seed"] = int(env["QFTLAB_SEED"])
        except ValueError:
            raise UsageError(f"QFTLAB_SEED must be an integer, got {env['QFTLAB_SEED']!r}")
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(data)
    for k, v in vars(args).items():
        if k in CONFIG_KEYS and v is not None:
            values[k] = v
    cfg = RunConfig(command=args.command, **values)
    if args.command != "separation" and not cfg.target:
        raise UsageError(f"{args.command} needs a target such as Z4xZ2 or GF(9)")
    if cfg.format not in ("table", "csv", "json"):
        raise UsageError(f"unknown format {cfg.format!r}")
    return cfg


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg, out)
    except (ParseError, UsageError) as exc:
        print(f"qftlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, CapExceeded) as exc:
        print(f"qftlab: precondition failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except QftlabError as exc:
        print(f"qftlab: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
