"""State vectors over CG and CG (x) CG, and the operators F_G, P_x, A_psi, B_psi, U_pi.

Two-register states use index(x) * n + index(y): register 1 is the slow index.
Permutation-type operators are kept as index maps with phases; only the
Fourier transform and verification products are dense.
"""
from __future__ import annotations

import json
import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IntegrityError, PreconditionError, StructureError
from .groups import (
    DEFAULT_TOL,
    CharacterBasis,
    GroupSpec,
    Homomorphism,
    check_compatibility,
    check_pair_compatibility,
)

NORM_TOL = 1e-9
DETERMINISTIC_THRESHOLD = 1 - 1e-9


# -- operators ---------------------------------------------------------------


class Operator:
    """A linear operator on C^dim.  ``apply`` acts along axis 0."""

    dim: int

    def apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        return self.apply(np.eye(self.dim, dtype=complex))

    def adjoint(self) -> "Operator":
        raise NotImplementedError

    def unitarity_defect(self) -> float:
        """||U U^dagger - I||_max computed on the dense form."""
        u = self.to_dense()
        return float(np.max(np.abs(u @ u.conj().T - np.eye(self.dim))))

    def is_unitary(self, tol: float = DEFAULT_TOL) -> bool:
        return self.unitarity_defect() <= tol

    def __matmul__(self, other: "Operator") -> "CompositeOperator":
        return CompositeOperator((self, other))


class DenseOperator(Operator):
    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise StructureError(f"expected a square matrix, got shape {matrix.shape}")
        self.matrix = matrix
        self.dim = matrix.shape[0]

    def apply(self, v):
        return np.tensordot(self.matrix, v, axes=(1, 0))

    def to_dense(self):
        return self.matrix.copy()

    def adjoint(self):
        return DenseOperator(self.matrix.conj().T)


class IndexMapOperator(Operator):
    """U |i> = phase[i] |perm[i]>: a phase-decorated permutation, unitary by construction."""

    def __init__(self, perm, phases=None):
        perm = np.asarray(perm, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(len(perm))):
            raise StructureError("index map is not a bijection")
        self.perm = perm
        self.phases = None if phases is None else np.asarray(phases, dtype=complex)
        self.dim = len(perm)

    def apply(self, v):
        v = np.asarray(v)
        if v.shape[0] != self.dim:
            raise StructureError(f"dimension mismatch: {v.shape[0]} vs {self.dim}")
        src = v if self.phases is None else v * self.phases.reshape((-1,) + (1,) * (v.ndim - 1))
        out = np.empty_like(src, dtype=np.result_type(src, complex))
        out[self.perm] = src
        return out

    def to_dense(self):
        u = np.zeros((self.dim, self.dim), dtype=complex)
        u[self.perm, np.arange(self.dim)] = 1 if self.phases is None else self.phases
        return u

    def adjoint(self):
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.dim)
        phases = None if self.phases is None else self.phases[inv].conj()
        return IndexMapOperator(inv, phases)

    def unitarity_defect(self) -> float:
        if self.phases is None:
            return 0.0
        return float(np.max(np.abs(np.abs(self.phases) - 1)))


class CompositeOperator(Operator):
    """Ordered product factors[0] @ factors[1] @ ...; the last factor acts first."""

    def __init__(self, factors: Sequence[Operator]):
        flat = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, CompositeOperator) else [f])
        dims = {f.dim for f in flat}
        if len(dims) != 1:
            raise StructureError(f"composite of operators with dimensions {sorted(dims)}")
        self.factors = tuple(flat)
        self.dim = dims.pop()

    def apply(self, v):
        for f in reversed(self.factors):
            v = f.apply(v)
        return v

    def adjoint(self):
        return CompositeOperator([f.adjoint() for f in reversed(self.factors)])


class QFTOperator(Operator):
    """F_G (or its adjoint) applied row block by row block, never storing n x n."""

    def __init__(self, basis: CharacterBasis, adjoint: bool = False, block: int = 256):
        self.basis = basis
        self.is_adjoint = adjoint
        self.block = block
        self.dim = basis.group.order

    def apply(self, v):
        v = np.asarray(v, dtype=complex)
        n = self.dim
        out = np.zeros_like(v)
        scale = 1 / np.sqrt(n)
        for start in range(0, n, self.block):
            xs = np.arange(start, min(n, start + self.block))
            rows = self.basis.rows(xs)  # rows[x, y] = chi_x(y)
            if self.is_adjoint:
                out[xs] = np.tensordot(rows.conj(), v, axes=(1, 0)) * scale
            else:
                out += np.tensordot(rows.T, v[xs], axes=(1, 0)) * scale
        return out

    def adjoint(self):
        return QFTOperator(self.basis, not self.is_adjoint, self.block)


_qft_cache: "weakref.WeakKeyDictionary[CharacterBasis, np.ndarray]" = weakref.WeakKeyDictionary()


def qft_matrix(basis: CharacterBasis, cap: int | None = None) -> np.ndarray:
    """Entry (row y, column x) = chi_x(y) / sqrt(n)."""
    basis.group.require_dense(cap, "dense QFT")
    f = _qft_cache.get(basis)
    if f is None:
        f = basis.table(cap).T / np.sqrt(basis.group.order)
        f.setflags(write=False)
        _qft_cache[basis] = f
    return f


def qft(basis: CharacterBasis, cap: int | None = None) -> DenseOperator:
    return DenseOperator(qft_matrix(basis, cap))


def qft_apply(basis: CharacterBasis, state: "StateVector", adjoint: bool = False) -> "StateVector":
    return apply(QFTOperator(basis, adjoint), state)


def translation_op(group: GroupSpec, x) -> IndexMapOperator:
    """P_x |y> = |x + y>."""
    i = group.index_of(group.validate(x))
    idx = np.arange(group.order)
    return IndexMapOperator(group.add_indices(np.full(group.order, i), idx))


def permutation_op(group: GroupSpec, pi) -> IndexMapOperator:
    """U_pi |y> = |pi(y)> for pi given as an index table."""
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (group.order,):
        raise StructureError(f"permutation has {pi.size} entries, {group} has {group.order}")
    return IndexMapOperator(pi)


def _register_maps(psi: Homomorphism):
    g = psi.group
    n = g.order
    xs = np.repeat(np.arange(n), n)
    ys = np.tile(np.arange(n), n)
    return g, n, xs, ys


def a_psi(psi: Homomorphism) -> IndexMapOperator:
    """A_psi |x>|y> = |x>|y + psi(x)>."""
    g, n, xs, ys = _register_maps(psi)
    return IndexMapOperator(xs * n + g.add_indices(ys, psi.table[xs]))


def b_psi(psi: Homomorphism) -> IndexMapOperator:
    """B_psi |x>|y> = |x + psi(y)>|y>."""
    g, n, xs, ys = _register_maps(psi)
    return IndexMapOperator(g.add_indices(xs, psi.table[ys]) * n + ys)


# -- states ------------------------------------------------------------------


@dataclass
class StateVector:
    """Amplitudes over G (registers=1) or G x G (registers=2)."""

    group: GroupSpec
    amps: np.ndarray
    registers: int = 1

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if self.registers not in (1, 2):
            raise StructureError("registers must be 1 or 2")
        if self.amps.size != self.group.order ** self.registers:
            raise StructureError(
                f"{self.amps.size} amplitudes for {self.registers} register(s) over {self.group}")

    @classmethod
    def basis(cls, group: GroupSpec, x, y=None) -> "StateVector":
        n = group.order
        i = group.index_of(group.validate(x))
        if y is None:
            amps = np.zeros(n, dtype=complex)
            amps[i] = 1
            return cls(group, amps, 1)
        amps = np.zeros(n * n, dtype=complex)
        amps[i * n + group.index_of(group.validate(y))] = 1
        return cls(group, amps, 2)

    @classmethod
    def product(cls, a: "StateVector", b: "StateVector") -> "StateVector":
        if a.group != b.group or a.registers != 1 or b.registers != 1:
            raise StructureError("product needs two one-register states over the same group")
        return cls(a.group, np.kron(a.amps, b.amps), 2)

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def check_norm(self, tol: float = NORM_TOL) -> "StateVector":
        if abs(self.norm() - 1) > tol:
            raise IntegrityError(f"state norm {self.norm():.12g} deviates from 1")
        return self

    def as_matrix(self) -> np.ndarray:
        """Two-register amplitudes as an n x n array [x, y]."""
        if self.registers != 2:
            raise StructureError("as_matrix needs a two-register state")
        n = self.group.order
        return self.amps.reshape(n, n)

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def to_json(self) -> str:
        return json.dumps(complex_pairs(self.amps))


def complex_pairs(a: np.ndarray) -> list:
    """Nested [re, im] lists for JSON export."""
    a = np.asarray(a)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [complex_pairs(v) for v in a]


def apply(op: Operator, state: StateVector) -> StateVector:
    if op.dim != state.dim:
        raise StructureError(f"operator of dimension {op.dim} on state of dimension {state.dim}")
    return StateVector(state.group, op.apply(state.amps), state.registers).check_norm()


def fourier_state(basis: CharacterBasis, x) -> StateVector:
    """|chi_x> = n^(-1/2) sum_y conj(chi_x(y)) |y>."""
    g = basis.group
    row = basis.rows([g.index_of(g.validate(x))])[0]
    return StateVector(g, row.conj() / np.sqrt(g.order), 1)


def tensor_apply(u: Operator, v: Operator, state: StateVector, dense: bool = False) -> StateVector:
    """(U (x) V) on a two-register state.

    The default path applies U down the columns and V along the rows of the
    n x n amplitude array; ``dense=True`` materialises the Kronecker product.
    """
    if state.registers != 2:
        raise StructureError("tensor_apply needs a two-register state")
    n = state.group.order
    if u.dim != n or v.dim != n:
        raise StructureError(f"operators of dimension {u.dim}, {v.dim} on registers of size {n}")
    if dense:
        amps = np.kron(u.to_dense(), v.to_dense()) @ state.amps
    else:
        m = u.apply(state.as_matrix())
        amps = v.apply(m.T).T
    return StateVector(state.group, amps, 2).check_norm()


# -- measurement -------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    group: GroupSpec
    probs: np.ndarray

    def probability(self, x) -> float:
        return float(self.probs[self.group.index_of(self.group.validate(x))])

    def deterministic(self, threshold: float = DETERMINISTIC_THRESHOLD):
        """The outcome with probability >= threshold, or None."""
        i = int(np.argmax(self.probs))
        return self.group.element_of(i) if self.probs[i] >= threshold else None

    def sample(self, rng=None, size=None):
        rng = np.random.default_rng(rng)
        p = self.probs / self.probs.sum()
        idx = rng.choice(self.group.order, size=size, p=p)
        if size is None:
            return self.group.element_of(int(idx))
        return [self.group.element_of(int(i)) for i in idx]


def measure_register(state: StateVector, register: int = 1) -> Distribution:
    """Marginal distribution of one register of a two-register state."""
    if state.registers != 2 or register not in (1, 2):
        raise StructureError("measure_register needs a two-register state and register 1 or 2")
    state.check_norm()
    p = np.abs(state.as_matrix()) ** 2
    return Distribution(state.group, p.sum(axis=1 if register == 1 else 0))


# -- control/target inversion --------------------------------------------------


def _conjugated_columns(f: np.ndarray, a: IndexMapOperator, cols: np.ndarray) -> np.ndarray:
    """Columns (x, y) of (F^dagger (x) F) A (F (x) F^dagger), shape (n, n, len(cols))."""
    n = f.shape[0]
    fd = f.conj().T
    xs, ys = cols // n, cols % n
    # (F (x) F^dagger)|x>|y> = F[:, x] outer Fd[:, y]
    s = f[:, xs][:, None, :] * fd[:, ys][None, :, :]
    s = a.apply(s.reshape(n * n, -1)).reshape(n, n, -1)
    s = np.tensordot(fd, s, axes=(1, 0))
    return f @ s


def inversion_residual(basis: CharacterBasis, psi: Homomorphism, phi: Homomorphism,
                       method: str = "columns", cap: int | None = None,
                       block_entries: int = 1 << 21) -> float:
    """max |(F^dagger (x) F) A_psi (F (x) F^dagger) - B_phi| over all n^4 entries.

    ``columns`` evaluates the operator product on every basis column in
    blocks; ``kron`` builds the n^2 x n^2 Kronecker matrices literally.
    """
    g = basis.group
    g.require_dense(cap, "inversion check")
    f = qft_matrix(basis, cap)
    n = g.order
    a = a_psi(psi)
    b = b_psi(phi)
    if method == "kron":
        fd = f.conj().T
        lhs = np.kron(fd, f) @ a.to_dense() @ np.kron(f, fd)
        return float(np.max(np.abs(lhs - b.to_dense())))
    if method != "columns":
        raise ValueError(f"unknown method {method!r}")
    worst = 0.0
    step = max(1, block_entries // (n * n))
    for start in range(0, n * n, step):
        cols = np.arange(start, min(n * n, start + step))
        got = _conjugated_columns(f, a, cols).reshape(n * n, -1)
        want = np.zeros_like(got)
        want[b.perm[cols], np.arange(len(cols))] = 1
        worst = max(worst, float(np.max(np.abs(got - want))))
    return worst


def verify_inversion(basis: CharacterBasis, psi: Homomorphism, **kw) -> float:
    """Residual of the control/target inversion identity at a compatible psi."""
    ok = check_compatibility(basis, psi, cap=kw.get("cap"))
    if not ok:
        raise PreconditionError(f"psi is not compatible with the basis; witness (y, z) = {ok.witness}")
    return inversion_residual(basis, psi, psi, **kw)


def verify_inversion_pair(basis: CharacterBasis, psi: Homomorphism, phi: Homomorphism, **kw) -> float:
    """Residual of (F^dagger (x) F) A_psi (F (x) F^dagger) = B_phi for a compatible pair."""
    ok = check_pair_compatibility(basis, psi, phi, cap=kw.get("cap"))
    if not ok:
        raise PreconditionError(f"(psi, phi) is not a compatible pair; witness {ok.witness}")
    return inversion_residual(basis, psi, phi, **kw)


def inversion_trace(basis: CharacterBasis, psi: Homomorphism, x, y, phi: Homomorphism | None = None):
    """Follow the basis state |x>|y> through the inversion identity step by step.

    Returns the residual of each intermediate claim:
      prepare:  (F (x) F^dagger)|x>|y> = |F_x>|F_{-y}>
      query:    A_psi of that       = |F_{x+phi(y)}>|F_{-y}>
      finish:   (F^dagger (x) F) of that = |x+phi(y)>|y>
    where |F_u> = F|u>.
    """
    phi = psi if phi is None else phi
    g = basis.group
    f = qft(basis)
    fd = f.adjoint()
    x, y = g.validate(x), g.validate(y)

    def fstate(u):
        return apply(f, StateVector.basis(g, u))

    s0 = StateVector.basis(g, x, y)
    s1 = tensor_apply(f, fd, s0)
    want1 = StateVector.product(fstate(x), fstate(g.neg(y)))
    s2 = apply(a_psi(psi), s1)
    target = g.add(x, phi(y))
    want2 = StateVector.product(fstate(target), fstate(g.neg(y)))
    s3 = tensor_apply(fd, f, s2)
    want3 = StateVector.basis(g, target, y)
    return {
        "prepare": float(np.max(np.abs(s1.amps - want1.amps))),
        "query": float(np.max(np.abs(s2.amps - want2.amps))),
        "finish": float(np.max(np.abs(s3.amps - want3.amps))),
    }
