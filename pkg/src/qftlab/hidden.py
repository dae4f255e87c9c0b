"""The hidden homomorphism problem: black box (x, y) -> (x, pi(y + psi(x))).

One quantum query recovers psi(a) exactly.  Classically, on Z_p the only
information is a collision between two outputs, which pins down psi(1);
the Monte Carlo harness measures how often that happens within m queries.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import IntegrityError, PreconditionError, StructureError
from .fields import FieldSpec, is_prime, mul_hom
from .groups import CharacterBasis, GroupSpec, Homomorphism, diagonal_hom, product_basis
from .sim import (
    IndexMapOperator,
    StateVector,
    a_psi,
    apply,
    measure_register,
    permutation_op,
    qft,
    tensor_apply,
)


class BlackBox:
    """Hidden (psi, pi) behind a counted query interface.

    Not thread safe: a box belongs to one trial.
    """

    def __init__(self, psi: Homomorphism, pi, seed=None):
        self._psi = psi
        self._pi = permutation_op(psi.group, pi).perm
        self._query_op = None
        self.seed = seed
        self.query_count = 0

    @classmethod
    def random(cls, target, rng=None) -> "BlackBox":
        """Uniform psi from the structured family of ``target`` and a uniform pi."""
        seed = rng if isinstance(rng, (int, np.integer)) else None
        rng = np.random.default_rng(rng)
        psi = sample_hom(target, rng)
        return cls(psi, rng.permutation(psi.group.order), seed=seed)

    @property
    def group(self) -> GroupSpec:
        return self._psi.group

    def audit(self) -> tuple[Homomorphism, np.ndarray]:
        """Privileged access to the hidden data, for tests and audit records."""
        return self._psi, self._pi.copy()

    def classical_query(self, x, y):
        g = self.group
        x = g.validate(x)
        image = g.element_of(int(self._psi.table[g.index_of(x)]))
        inner = g.index_of(g.add(y, image))
        self.query_count += 1
        return x, g.element_of(int(self._pi[inner]))

    def quantum_query(self, state: StateVector) -> StateVector:
        """U = (I (x) U_pi) A_psi on a two-register state."""
        if state.registers != 2 or state.group != self.group:
            raise StructureError("quantum query needs a two-register state over the box's group")
        if self._query_op is None:
            n = self.group.order
            self._query_op = (a_psi(self._psi), IndexMapOperator(np.arange(n)),
                              IndexMapOperator(self._pi))
        a, ident, u_pi = self._query_op
        self.query_count += 1
        return tensor_apply(ident, u_pi, apply(a, state))


def sample_hom(target, rng) -> Homomorphism:
    """psi_s with s uniform: diagonal on product groups, multiplication on fields."""
    rng = np.random.default_rng(rng)
    if isinstance(target, FieldSpec):
        return mul_hom(target, target.group.element_of(int(rng.integers(target.q))))
    if isinstance(target, GroupSpec):
        return diagonal_hom(target, target.element_of(int(rng.integers(target.order))))
    raise StructureError(f"no homomorphism sampler for {target!r}")


# -- quantum solver ------------------------------------------------------------


@dataclass
class QuantumRun:
    value: tuple
    probability: float
    queries: int
    state: StateVector = field(repr=False)


def run_quantum(box: BlackBox, basis: CharacterBasis, a) -> QuantumRun:
    """|0>|a> -> (F (x) F^dagger) -> one query -> (F^dagger (x) F) -> measure register 1."""
    g = box.group
    if basis.group != g:
        raise StructureError("basis and black box live on different groups")
    f = qft(basis)
    fd = f.adjoint()
    before = box.query_count
    state = StateVector.basis(g, g.zero, a)
    state = tensor_apply(f, fd, state)
    state = box.quantum_query(state)
    state = tensor_apply(fd, f, state)
    dist = measure_register(state, 1)
    value = dist.deterministic()
    if value is None:
        raise IntegrityError(
            f"register 1 is not deterministic (max probability {dist.probs.max():.12g}); "
            "is psi compatible with the basis?")
    return QuantumRun(value, dist.probability(value), box.query_count - before, state)


def solve_quantum(box: BlackBox, basis: CharacterBasis, a) -> tuple:
    """psi(a) from exactly one query."""
    return run_quantum(box, basis, a).value


# -- classical solver ----------------------------------------------------------


@dataclass
class ClassicalOutcome:
    value: tuple | None
    queries: int
    pair: tuple[int, int] | None = None

    @property
    def determined(self) -> bool:
        return self.value is not None


def _require_prime_cyclic(g: GroupSpec) -> int:
    if g.rank != 1 or not is_prime(g.order):
        raise PreconditionError(f"collision solver needs Z_p with p prime, got {g}")
    return g.order


def solve_classical_collision(box: BlackBox, budget: int, rng=None,
                              queries: Sequence[tuple[int, int]] | None = None) -> ClassicalOutcome:
    """Query until two outputs collide, then psi(1) = (y_i - y_j) / (x_j - x_i) mod p.

    Default strategy: distinct x (a random arrangement of Z_p) paired with
    uniformly random y.  ``queries`` overrides it with an explicit list.
    """
    p = _require_prime_cyclic(box.group)
    if queries is None:
        rng = np.random.default_rng(rng)
        budget = min(budget, p)
        xs = rng.permutation(p)[:budget]
        ys = rng.integers(p, size=budget)
        queries = list(zip(xs.tolist(), ys.tolist()))
    else:
        queries = [(int(x) % p, int(y) % p) for x, y in queries[:budget]]
        if len(set(queries)) != len(queries):
            raise PreconditionError("classical queries must be pairwise distinct")
    seen: dict[int, int] = {}
    for k, (x, y) in enumerate(queries):
        (_, (out,)) = box.classical_query((x,), (y,))
        j = seen.get(out)
        if j is not None:
            xj, yj = queries[j]
            if xj == x:  # pragma: no cover - outputs of a permutation cannot collide here
                continue
            value = (y - yj) * pow(xj - x, -1, p) % p
            return ClassicalOutcome((value,), k + 1, (j, k))
        seen[out] = k
    return ClassicalOutcome(None, len(queries))


# -- bounds ----------------------------------------------------------------------


def collision_bound(n: int, m: int) -> float:
    """m^2 / (2n - m^2); infinite (vacuous) once m^2 >= 2n."""
    if m * m >= 2 * n:
        return math.inf
    return m * m / (2 * n - m * m)


def lower_bound_threshold(n: int) -> int:
    """ceil(sqrt(2n/3)): the least m with m^2/(2n - m^2) >= 1/2."""
    if n < 2:
        raise ValueError("n must be >= 2")
    m = math.isqrt(2 * n // 3)
    while 3 * m * m < 2 * n:
        m += 1
    while m > 0 and 3 * (m - 1) ** 2 >= 2 * n:
        m -= 1
    return m


def guess_success(n: int, m: int) -> float:
    """Chance of guessing psi(1) among the n - m(m-1)/2 candidates left after no collision."""
    left = n - m * (m - 1) // 2
    return 1.0 if left <= 1 else 1.0 / left


def default_budgets(n: int) -> list[int]:
    return list(range(1, math.ceil(math.sqrt(2 * n)) + 1))


# -- experiments -----------------------------------------------------------------


@dataclass
class ExperimentReport:
    n: int
    m: int
    trials: int
    collision_rate: float
    stderr: float
    paper_bound: float
    threshold: int
    quantum_queries: int
    quantum_correct_rate: float
    seed: int
    guess_success: float
    audit_mismatches: int = 0
    audit: list = field(default_factory=list, repr=False)

    @property
    def within_bound(self) -> bool:
        return self.collision_rate <= self.paper_bound + 3 * self.stderr

    @property
    def ok(self) -> bool:
        return self.within_bound and self.audit_mismatches == 0 and self.quantum_correct_rate == 1.0

    def row(self) -> dict:
        d = asdict(self)
        d.pop("audit")
        return d


def _trial_seeds(seed: int, *key: int, count: int) -> np.ndarray:
    ss = np.random.SeedSequence([seed, *key])
    return np.random.default_rng(ss).integers(0, 2**63, size=count)


def classical_cell(n: int, m: int, trials: int, seed: int, audit: bool = False):
    """Collision statistics for one (n, m) cell; returns (hits, mismatches, records)."""
    g = GroupSpec((n,))
    hits = mismatches = 0
    records = []
    for t in _trial_seeds(seed, n, m, count=trials):
        rng = np.random.default_rng(int(t))
        box = BlackBox.random(g, rng)
        out = solve_classical_collision(box, m, rng)
        if box.query_count > m:
            raise IntegrityError(f"classical solver used {box.query_count} > {m} queries")
        truth = box.audit()[0]((1,))
        if out.determined:
            hits += 1
            mismatches += out.value != truth
        if audit:
            records.append({"trial_seed": int(t), "psi_1": truth[0],
                            "answer": None if out.value is None else out.value[0],
                            "queries": out.queries})
    return hits, mismatches, records


def quantum_column(target, trials: int, seed: int, basis: CharacterBasis | None = None):
    """Run solve_quantum on random (psi, pi, a); returns (correct rate, max queries used)."""
    g = target.group if isinstance(target, FieldSpec) else target
    basis = basis or product_basis(g)
    correct, worst = 0, 0
    for t in _trial_seeds(seed, g.order, 0, count=trials):
        rng = np.random.default_rng(int(t))
        box = BlackBox.random(target, rng)
        a = g.element_of(int(rng.integers(g.order)))
        run = run_quantum(box, basis, a)
        worst = max(worst, box.query_count)
        correct += run.value == box.audit()[0](a) and box.query_count == 1
    return correct / trials, worst


def _cell_task(args):
    return args, classical_cell(*args)


def run_separation_experiment(orders: Iterable[int], trials: int = 10_000,
                              budgets: Sequence[int] | None = None, seed: int = 0,
                              quantum_trials: int = 100, workers: int = 1,
                              audit: bool = False) -> list[ExperimentReport]:
    """One report per (n, m); every randomness source is derived from ``seed``."""
    orders = list(orders)
    for n in orders:
        if not is_prime(n):
            raise PreconditionError(f"order {n} is not prime")
    cells = [(n, m, trials, seed, audit) for n in orders
             for m in (budgets if budgets is not None else default_budgets(n))]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = dict(pool.map(_cell_task, cells))
    else:
        results = dict(map(_cell_task, cells))
    quantum = {n: quantum_column(GroupSpec((n,)), quantum_trials, seed) for n in orders}

    reports = []
    for cell in cells:
        n, m = cell[0], cell[1]
        hits, mismatches, records = results[cell]
        rate = hits / trials
        q_rate, q_queries = quantum[n]
        reports.append(ExperimentReport(
            n=n, m=m, trials=trials, collision_rate=rate,
            stderr=math.sqrt(rate * (1 - rate) / trials),
            paper_bound=collision_bound(n, m), threshold=lower_bound_threshold(n),
            quantum_queries=q_queries, quantum_correct_rate=q_rate, seed=seed,
            guess_success=guess_success(n, m), audit_mismatches=mismatches, audit=records))
    return reports


def first_collision_counts(n: int, trials: int, seed: int = 0) -> np.ndarray:
    """Number of queries until the first collision, budget n (n + 1 if none occurs)."""
    g = GroupSpec((n,))
    counts = np.empty(trials, dtype=np.int64)
    for i, t in enumerate(_trial_seeds(seed, n, 2**32 - 1, count=trials)):
        rng = np.random.default_rng(int(t))
        box = BlackBox.random(g, rng)
        out = solve_classical_collision(box, n, rng)
        counts[i] = out.queries if out.determined else n + 1
    return counts


def birthday_growth(orders: Sequence[int], trials: int = 2000, seed: int = 0) -> dict:
    """Median first-collision query count per order and the ratio between consecutive orders."""
    medians = {n: float(np.median(first_collision_counts(n, trials, seed))) for n in orders}
    ratios = [medians[b] / medians[a] for a, b in zip(orders, orders[1:])]
    return {"medians": medians, "ratios": ratios}
