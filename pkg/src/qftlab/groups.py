"""Finite abelian groups Z_m1 x ... x Z_mk, their characters and endomorphisms.

Elements are plain tuples of coordinates.  Every group also carries a
mixed-radix indexing of its elements (last coordinate varies fastest), which
fixes the basis order of every dense vector and matrix in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Any, Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, StructureError

DEFAULT_DENSE_CAP = 4096
DEFAULT_TOL = 1e-9

Element = tuple


@dataclass(frozen=True)
class GroupSpec:
    """The abelian group Z_m1 x ... x Z_mk (each m_j >= 2)."""

    moduli: tuple[int, ...]

    def __post_init__(self):
        moduli = tuple(int(m) for m in self.moduli)
        if not moduli:
            raise StructureError("a group needs at least one cyclic factor")
        bad = [m for m in moduli if m < 2]
        if bad:
            raise StructureError(f"cyclic factors must have order >= 2, got {bad}")
        object.__setattr__(self, "moduli", moduli)

    @cached_property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    def __str__(self):
        return "x".join(f"Z{m}" for m in self.moduli)

    def __len__(self):
        return self.order

    # -- elements -----------------------------------------------------------

    def validate(self, x) -> Element:
        x = tuple(int(c) for c in x)
        if len(x) != self.rank:
            raise StructureError(f"element {x} has {len(x)} coordinates, {self} needs {self.rank}")
        return tuple(c % m for c, m in zip(x, self.moduli))

    @property
    def zero(self) -> Element:
        return (0,) * self.rank

    def add(self, x, y) -> Element:
        x, y = self.validate(x), self.validate(y)
        return tuple((a + b) % m for a, b, m in zip(x, y, self.moduli))

    def neg(self, x) -> Element:
        return tuple(-a % m for a, m in zip(self.validate(x), self.moduli))

    def sub(self, x, y) -> Element:
        return self.add(x, self.neg(y))

    def scale(self, k: int, x) -> Element:
        return tuple(k * a % m for a, m in zip(self.validate(x), self.moduli))

    def element_of(self, index: int) -> Element:
        index = int(index)
        if not 0 <= index < self.order:
            raise IndexError(f"index {index} out of range for {self} of order {self.order}")
        coords = []
        for m in reversed(self.moduli):
            index, c = divmod(index, m)
            coords.append(c)
        return tuple(reversed(coords))

    def index_of(self, x) -> int:
        x = tuple(int(c) for c in x)
        if len(x) != self.rank or any(not 0 <= c < m for c, m in zip(x, self.moduli)):
            raise StructureError(f"{x} is not a reduced element of {self}")
        index = 0
        for c, m in zip(x, self.moduli):
            index = index * m + c
        return index

    def elements(self) -> Iterator[Element]:
        for i in range(self.order):
            yield self.element_of(i)

    # -- vectorised index arithmetic ------------------------------------------

    def coords(self, indices) -> np.ndarray:
        """Coordinates of each index, shape (len(indices), rank)."""
        indices = np.asarray(indices, dtype=np.int64)
        return np.stack(np.unravel_index(indices, self.moduli), axis=-1)

    def indices(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64) % np.asarray(self.moduli)
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.moduli)

    def add_indices(self, a, b) -> np.ndarray:
        return self.indices(self.coords(a) + self.coords(b))

    def neg_indices(self, a) -> np.ndarray:
        return self.indices(-self.coords(a))

    def require_dense(self, cap: int | None = None, what: str = "dense construction"):
        cap = DEFAULT_DENSE_CAP if cap is None else cap
        if self.order > cap:
            raise CapExceeded(f"{what} refused: |G|={self.order} exceeds dense cap {cap}")


def cyclic(*moduli: int) -> GroupSpec:
    return GroupSpec(tuple(moduli))


@dataclass(frozen=True)
class Check:
    """Outcome of an exhaustive or sampled verification."""

    ok: bool
    witness: Any = None
    checked: int = 0

    def __bool__(self):
        return self.ok


# -- characters ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CharacterBasis:
    """An indexing x -> chi_x of the dual group by the group itself.

    ``pairing(x, y)`` evaluates chi_x(y) on element tuples.  ``rows`` is an
    optional vectorised builder returning chi_x(y) for an array of x indices
    against every y; without it rows are filled from the pairing.
    """

    group: GroupSpec
    pairing: Callable[[Element, Element], complex]
    name: str = ""
    tolerance: float = DEFAULT_TOL
    row_builder: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __call__(self, x, y) -> complex:
        return self.pairing(self.group.validate(x), self.group.validate(y))

    def rows(self, xs) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=np.int64))
        if self.row_builder is not None:
            return self.row_builder(xs)
        g = self.group
        ys = [g.element_of(j) for j in range(g.order)]
        return np.array(
            [[self.pairing(g.element_of(i), y) for y in ys] for i in xs], dtype=complex
        ).reshape(len(xs), g.order)

    def table(self, cap: int | None = None) -> np.ndarray:
        """Dense n x n array with entry [x, y] = chi_x(y)."""
        self.group.require_dense(cap, "character table")
        return self._table

    @cached_property
    def _table(self) -> np.ndarray:
        t = self.rows(np.arange(self.group.order))
        t.setflags(write=False)
        return t


def roots_of_unity(d: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(d) / d)


def exponent_basis(group: GroupSpec, denominator: int,
                   exponents: Callable[[np.ndarray, np.ndarray], np.ndarray],
                   name: str = "") -> CharacterBasis:
    """Basis whose characters are chi_x(y) = exp(2 pi i E(x, y) / D) with integer E.

    ``exponents(xs, ys)`` takes index arrays and returns the integer matrix
    E[x, y]; the exponent is reduced mod D before the root of unity is taken.
    """
    roots = roots_of_unity(denominator)
    all_y = np.arange(group.order)

    def pairing(x, y):
        e = exponents(np.array([group.index_of(x)]), np.array([group.index_of(y)]))
        return complex(roots[int(e[0, 0]) % denominator])

    def row_builder(xs):
        return roots[np.mod(exponents(xs, all_y), denominator)]

    return CharacterBasis(group, pairing, name=name, row_builder=row_builder)


def product_basis(group: GroupSpec) -> CharacterBasis:
    """chi_x(y) = prod_j exp(2 pi i x_j y_j / m_j), products taken mod m_j."""
    moduli = group.moduli

    def pairing(x, y):
        value = 1 + 0j
        for a, b, m in zip(x, y, moduli):
            value *= np.exp(2j * np.pi * ((a * b) % m) / m)
        return complex(value)

    d = reduce(math.lcm, moduli)
    weights = np.array([d // m for m in moduli], dtype=np.int64)
    mods = np.array(moduli, dtype=np.int64)

    def row_builder(xs):
        roots = roots_of_unity(d)
        ys = group.coords(np.arange(group.order))
        xc = group.coords(xs)
        e = np.zeros((len(xs), group.order), dtype=np.int64)
        for j in range(group.rank):
            e += (np.outer(xc[:, j], ys[:, j]) % mods[j]) * weights[j]
        return roots[e % d]

    return CharacterBasis(group, pairing, name=f"product basis of {group}", row_builder=row_builder)


# -- homomorphisms ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Homomorphism:
    """A map G -> G given by a vectorised action on element indices.

    ``kind`` is one of diagonal, field_mul, matrix_left, matrix_right, table;
    ``params`` keeps the structured data (s, S, or the explicit table).
    Nothing here guarantees additivity: see verify_homomorphism.
    """

    group: GroupSpec
    kind: str
    params: Any
    index_map: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, x) -> Element:
        i = self.group.index_of(self.group.validate(x))
        return self.group.element_of(int(self.index_map(np.array([i]))[0]))

    def map_indices(self, indices) -> np.ndarray:
        return np.asarray(self.index_map(np.asarray(indices, dtype=np.int64)), dtype=np.int64)

    @cached_property
    def table(self) -> np.ndarray:
        """psi as an index array: table[i] = index of psi(element_of(i))."""
        t = self.map_indices(np.arange(self.group.order))
        t.setflags(write=False)
        return t


def diagonal_hom(group: GroupSpec, s) -> Homomorphism:
    """psi_s(y) = (s_1 y_1, ..., s_k y_k) taken mod m_j."""
    s = group.validate(s)
    sv = np.array(s, dtype=np.int64)

    def index_map(idx):
        return group.indices(group.coords(idx) * sv)

    return Homomorphism(group, "diagonal", s, index_map)


def table_hom(group: GroupSpec, mapping: Mapping | Sequence | Callable) -> Homomorphism:
    """Explicit map, from a dict/sequence of images or an element function."""
    if callable(mapping):
        images = [group.validate(mapping(x)) for x in group.elements()]
    elif isinstance(mapping, Mapping):
        images = [group.validate(mapping[x]) for x in group.elements()]
    else:
        if len(mapping) != group.order:
            raise StructureError(f"table has {len(mapping)} entries, {group} has {group.order}")
        images = [group.validate(v if isinstance(v, (tuple, list)) else (v,)) for v in mapping]
    table = np.array([group.index_of(v) for v in images], dtype=np.int64)
    return Homomorphism(group, "table", tuple(images), lambda idx: table[idx])


def identity_hom(group: GroupSpec) -> Homomorphism:
    return diagonal_hom(group, (1,) * group.rank)


def zero_hom(group: GroupSpec) -> Homomorphism:
    return diagonal_hom(group, group.zero)


def _require_exhaustive(group: GroupSpec, cap):
    group.require_dense(cap, "exhaustive check")


def verify_homomorphism(psi: Homomorphism, *, sampled: bool = False, trials: int = 10_000,
                        rng=None, cap: int | None = None) -> Check:
    """True iff psi(x+y) = psi(x)+psi(y); the witness is the first failing (x, y).

    Exhaustive over all pairs unless ``sampled``; groups above the cap must
    use the sampled mode.
    """
    g = psi.group
    if sampled:
        rng = np.random.default_rng(rng)
        x = rng.integers(g.order, size=trials)
        y = rng.integers(g.order, size=trials)
        lhs = psi.map_indices(g.add_indices(x, y))
        rhs = g.add_indices(psi.map_indices(x), psi.map_indices(y))
        bad = np.flatnonzero(lhs != rhs)
        if bad.size:
            i = bad[0]
            return Check(False, (g.element_of(x[i]), g.element_of(y[i])), trials)
        return Check(True, None, trials)

    _require_exhaustive(g, cap)
    t = psi.table
    idx = np.arange(g.order)
    for x in range(g.order):
        lhs = t[g.add_indices(np.full(g.order, x), idx)]
        rhs = g.add_indices(np.full(g.order, t[x]), t)
        bad = np.flatnonzero(lhs != rhs)
        if bad.size:
            return Check(False, (g.element_of(x), g.element_of(bad[0])), g.order ** 2)
    return Check(True, None, g.order ** 2)


def _first_mismatch(a: np.ndarray, b: np.ndarray, tol: float):
    bad = np.argwhere(np.abs(a - b) > tol)
    return None if bad.size == 0 else tuple(int(v) for v in bad[0])


def check_compatibility(basis: CharacterBasis, psi: Homomorphism, cap: int | None = None) -> Check:
    """True iff chi_y(psi(z)) = chi_{psi(y)}(z) for all y, z; witness (y, z)."""
    res = check_pair_compatibility(basis, psi, psi, cap=cap, require_commuting=False)
    return res if res.ok else Check(False, res.witness[1:], res.checked)


def check_pair_compatibility(basis: CharacterBasis, psi: Homomorphism, phi: Homomorphism,
                             cap: int | None = None, require_commuting: bool = True) -> Check:
    """True iff chi_y(psi(z)) = chi_{phi(y)}(z) for all y, z and psi o phi = phi o psi.

    The witness is ("character", y, z) or ("commute", x).
    """
    g = basis.group
    if psi.group != g or phi.group != g:
        raise StructureError("homomorphisms and basis live on different groups")
    _require_exhaustive(g, cap)
    t = basis.table(cap)
    if require_commuting:
        bad = np.flatnonzero(psi.table[phi.table] != phi.table[psi.table])
        if bad.size:
            return Check(False, ("commute", g.element_of(bad[0])), g.order)
    # lhs[y, z] = chi_y(psi(z)), rhs[y, z] = chi_{phi(y)}(z)
    hit = _first_mismatch(t[:, psi.table], t[phi.table, :], basis.tolerance)
    if hit is not None:
        y, z = hit
        return Check(False, ("character", g.element_of(y), g.element_of(z)), g.order ** 2)
    return Check(True, None, g.order ** 2)


def verify_orthogonality(basis: CharacterBasis, cap: int | None = None) -> float:
    """max_{i,j} |(1/n) sum_x chi_i(x) conj(chi_j(x)) - delta_ij|."""
    t = basis.table(cap)
    n = basis.group.order
    gram = t @ t.conj().T / n
    return float(np.max(np.abs(gram - np.eye(n))))
