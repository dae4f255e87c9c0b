"""GF(p^m) arithmetic, additive characters exp(2 pi i phi(xy)/p), and m x m matrix rings.

A field element is the tuple of coefficients (c_0, ..., c_{m-1}) of its
representative polynomial, so the additive group of GF(p^m) is literally the
product group Z_p^m and shares its indexing.  The reduction polynomial is
stored as f(Z) = Z^m - sum_i a_i Z^i; the text forms use the usual plus form.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import StructureError
from .groups import (
    CharacterBasis,
    GroupSpec,
    Homomorphism,
    exponent_basis,
    product_basis,
)

MAX_PRIME = 10_000
MAX_TRIAL_DIVISORS = 10**6


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p > MAX_PRIME:
        raise StructureError(f"primality by trial division is limited to p <= {MAX_PRIME}")
    return all(p % d for d in range(2, math.isqrt(p) + 1))


# -- polynomials over GF(p), coefficient lists low -> high -------------------


def _trim(c: list[int]) -> list[int]:
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def poly_rem(num: Sequence[int], den: Sequence[int], p: int) -> list[int]:
    """Remainder of num / den over GF(p); den must be monic."""
    r = [c % p for c in num]
    d = len(den) - 1
    for shift in range(len(r) - 1 - d, -1, -1):
        lead = r[shift + d]
        if lead:
            for i, c in enumerate(den):
                r[shift + i] = (r[shift + i] - lead * c) % p
    return _trim(r[:d] if d else [0])


def _monic(p: int, degree: int):
    for low in itertools.product(range(p), repeat=degree):
        yield list(low) + [1]


def is_irreducible(p: int, plus_coeffs: Sequence[int]) -> bool:
    """Irreducibility of a monic polynomial c_0 + c_1 Z + ... + Z^m over GF(p).

    Trial division by every monic polynomial of degree 1..m//2.
    """
    c = [int(v) % p for v in plus_coeffs]
    if len(c) < 2 or c[-1] != 1:
        raise StructureError(f"expected a monic polynomial of degree >= 1, got {list(plus_coeffs)}")
    m = len(c) - 1
    total = sum(p**d for d in range(1, m // 2 + 1))
    if total > MAX_TRIAL_DIVISORS:
        raise StructureError(f"trial division over {total} divisors is beyond the supported size")
    for degree in range(1, m // 2 + 1):
        for divisor in _monic(p, degree):
            if poly_rem(c, divisor, p) == [0]:
                return False
    return True


@lru_cache(maxsize=None)
def default_modulus(p: int, m: int) -> tuple[int, ...]:
    """First irreducible Z^m + c_{m-1} Z^{m-1} + ... + c_0 scanning (c_0, ..., c_{m-1})
    in increasing lexicographic order.  Returned in plus form, low -> high."""
    for low in itertools.product(range(p), repeat=m):
        c = list(low) + [1]
        if is_irreducible(p, c):
            return tuple(c)
    raise StructureError(f"no irreducible polynomial of degree {m} over GF({p})")  # pragma: no cover


# -- the field ---------------------------------------------------------------


@dataclass(frozen=True)
class FieldSpec:
    """GF(p^m) = GF(p)[Z] / <f>,  f(Z) = Z^m - sum_i a_i Z^i."""

    p: int
    m: int
    reduction_coeffs: tuple[int, ...]

    def __post_init__(self):
        p, m = int(self.p), int(self.m)
        a = tuple(int(v) % p for v in self.reduction_coeffs)
        if m < 1:
            raise StructureError("field degree must be >= 1")
        if not is_prime(p):
            raise StructureError(f"{p} is not prime")
        if len(a) != m:
            raise StructureError(f"expected {m} reduction coefficients, got {len(a)}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "reduction_coeffs", a)
        if not is_irreducible(p, self.plus_coeffs):
            raise StructureError(f"{self.poly_str()} is reducible over GF({p})")

    @classmethod
    def from_plus(cls, p: int, plus_coeffs: Sequence[int]) -> "FieldSpec":
        """From f = c_0 + c_1 Z + ... + Z^m (leading 1 included)."""
        c = [int(v) % p for v in plus_coeffs]
        if len(c) < 2 or c[-1] != 1:
            raise StructureError(f"expected a monic polynomial, got {list(plus_coeffs)}")
        return cls(p, len(c) - 1, tuple(-v % p for v in c[:-1]))

    @classmethod
    def of_order(cls, q: int) -> "FieldSpec":
        for p in range(2, q + 1):
            if q % p == 0:
                break
        m, rest = 0, q
        while rest % p == 0:
            rest //= p
            m += 1
        if rest != 1 or q < 2:
            raise StructureError(f"{q} is not a prime power")
        return cls.from_plus(p, default_modulus(p, m))

    @property
    def q(self) -> int:
        return self.p ** self.m

    @property
    def order(self) -> int:
        return self.q

    @property
    def plus_coeffs(self) -> tuple[int, ...]:
        return tuple(-a % self.p for a in self.reduction_coeffs) + (1,)

    @cached_property
    def group(self) -> GroupSpec:
        return GroupSpec((self.p,) * self.m)

    def poly_str(self) -> str:
        return format_poly(self.plus_coeffs)

    def __str__(self):
        return f"GF({self.q});f={self.poly_str()}"

    # -- element arithmetic on coefficient tuples --------------------------

    def element(self, coeffs) -> tuple[int, ...]:
        if isinstance(coeffs, int):
            coeffs = (coeffs,)
        c = [int(v) % self.p for v in coeffs]
        if len(c) > self.m:
            raise StructureError(f"{list(coeffs)} has more than {self.m} coefficients")
        return tuple(c + [0] * (self.m - len(c)))

    @property
    def zero(self):
        return (0,) * self.m

    @property
    def one(self):
        return self.element((1,))

    def add(self, x, y):
        x, y = self.element(x), self.element(y)
        return tuple((a + b) % self.p for a, b in zip(x, y))

    def neg(self, x):
        return tuple(-a % self.p for a in self.element(x))

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def mul(self, x, y):
        """Schoolbook product, then Z^m -> sum a_i Z^i until the degree drops below m."""
        x, y = self.element(x), self.element(y)
        p, m = self.p, self.m
        prod = [0] * (2 * m - 1)
        for i, a in enumerate(x):
            if a:
                for j, b in enumerate(y):
                    prod[i + j] = (prod[i + j] + a * b) % p
        for k in range(len(prod) - 1, m - 1, -1):
            lead = prod[k]
            if lead:
                prod[k] = 0
                for i, a in enumerate(self.reduction_coeffs):
                    prod[k - m + i] = (prod[k - m + i] + lead * a) % p
        return tuple(prod[:m])

    def inverse(self, x):
        x = self.element(x)
        if x == self.zero:
            raise ZeroDivisionError("zero has no inverse")
        for y in self.elements():
            if self.mul(x, y) == self.one:
                return y
        raise StructureError(f"{x} has no inverse; modulus not irreducible?")  # pragma: no cover

    def elements(self):
        return self.group.elements()

    def format(self, x) -> str:
        return format_poly(self.element(x), var="Z")

    # -- vectorised multiplication -------------------------------------------

    @cached_property
    def _z_powers(self) -> np.ndarray:
        """Matrices of multiplication by Z^0 .. Z^{m-1} on coefficient vectors."""
        p, m = self.p, self.m
        comp = np.zeros((m, m), dtype=np.int64)
        for i in range(m - 1):
            comp[i + 1, i] = 1
        comp[:, m - 1] = self.reduction_coeffs
        mats = [np.eye(m, dtype=np.int64)]
        for _ in range(m - 1):
            mats.append(comp @ mats[-1] % p)
        return np.array(mats)

    def mul_matrix(self, s) -> np.ndarray:
        """M_s with coeffs(s*x) = M_s @ coeffs(x) mod p."""
        s = np.array(self.element(s), dtype=np.int64)
        return np.tensordot(s, self._z_powers, axes=1) % self.p

    @cached_property
    def mul_table(self) -> np.ndarray:
        g = self.group
        coords = g.coords(np.arange(self.q))
        rows = [g.indices(coords @ self.mul_matrix(g.element_of(i)).T) for i in range(self.q)]
        return np.array(rows, dtype=np.int64)

    @cached_property
    def add_table(self) -> np.ndarray:
        idx = np.arange(self.q)
        return self.group.add_indices(idx[:, None], idx[None, :])


def format_poly(coeffs: Sequence[int], var: str = "Z") -> str:
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k]
        if not c:
            continue
        mono = "" if k == 0 else var if k == 1 else f"{var}^{k}"
        coef = str(c) if (c != 1 or k == 0) else ""
        terms.append(coef + mono)
    return "+".join(terms) if terms else "0"


@dataclass(frozen=True)
class ZmodRing:
    """The commutative ring Z_r, used as a base ring for matrix rings."""

    r: int

    def __post_init__(self):
        if int(self.r) < 2:
            raise StructureError("Z_r needs r >= 2")

    @property
    def order(self) -> int:
        return self.r

    @cached_property
    def group(self) -> GroupSpec:
        return GroupSpec((self.r,))

    def element(self, v):
        if isinstance(v, (tuple, list)):
            (v,) = v
        return (int(v) % self.r,)

    @property
    def zero(self):
        return (0,)

    @property
    def one(self):
        return (1,)

    def add(self, x, y):
        return ((self.element(x)[0] + self.element(y)[0]) % self.r,)

    def mul(self, x, y):
        return (self.element(x)[0] * self.element(y)[0] % self.r,)

    def format(self, x) -> str:
        return str(self.element(x)[0])

    @cached_property
    def mul_table(self) -> np.ndarray:
        idx = np.arange(self.r)
        return np.outer(idx, idx) % self.r

    @cached_property
    def add_table(self) -> np.ndarray:
        idx = np.arange(self.r)
        return (idx[:, None] + idx[None, :]) % self.r

    def __str__(self):
        return f"Z{self.r}"


BaseRing = Union[ZmodRing, FieldSpec]


# -- characters ------------------------------------------------------------


@dataclass(frozen=True)
class LinearFunctional:
    """phi(x) = sum_i w_i x_i mod p, a GF(p)-linear map GF(p^m) -> GF(p)."""

    p: int
    weights: tuple[int, ...]

    def __post_init__(self):
        w = tuple(int(v) % self.p for v in self.weights)
        if not any(w):
            raise StructureError("the linear functional must be nonzero")
        object.__setattr__(self, "weights", w)

    def __call__(self, x) -> int:
        return sum(a * b for a, b in zip(self.weights, x)) % self.p

    @classmethod
    def coefficient(cls, spec: FieldSpec, i: int = 0) -> "LinearFunctional":
        w = [0] * spec.m
        w[i] = 1
        return cls(spec.p, tuple(w))

    @classmethod
    def random(cls, spec: FieldSpec, rng) -> "LinearFunctional":
        rng = np.random.default_rng(rng)
        while True:
            w = tuple(int(v) for v in rng.integers(spec.p, size=spec.m))
            if any(w):
                return cls(spec.p, w)


def field_basis(spec: FieldSpec, functional: LinearFunctional | None = None) -> CharacterBasis:
    """chi_x(y) = exp(2 pi i phi(x y) / p) on the additive group of GF(q)."""
    phi = functional or LinearFunctional.coefficient(spec)
    if phi.p != spec.p or len(phi.weights) != spec.m:
        raise StructureError("functional does not match the field")
    g = spec.group
    w = np.array(phi.weights, dtype=np.int64)
    # phi(x y) = sum_i x_i (w^T Z^i) . y
    wz = np.stack([w @ zp % spec.p for zp in spec._z_powers])

    def exponents(xs, ys):
        return (g.coords(xs) @ wz % spec.p) @ g.coords(ys).T

    return exponent_basis(g, spec.p, exponents, name=f"GF({spec.q}) basis, phi={phi.weights}")


def field_character(spec: FieldSpec, functional: LinearFunctional, x, y) -> complex:
    """exp(2 pi i phi(x*y) / p) evaluated straight from field multiplication."""
    return complex(np.exp(2j * np.pi * functional(spec.mul(x, y)) / spec.p))


def verify_character_completeness(basis: CharacterBasis, cap: int | None = None) -> bool:
    """True iff x -> chi_x is injective (all rows of the character table distinct)."""
    t = basis.table(cap)
    key = np.round(np.concatenate([t.real, t.imag], axis=1), 8) + 0.0
    return len(np.unique(key, axis=0)) == basis.group.order


def base_ring_basis(ring: BaseRing) -> CharacterBasis:
    if isinstance(ring, ZmodRing):
        return product_basis(ring.group)
    return field_basis(ring)


def mul_hom(spec: FieldSpec, s) -> Homomorphism:
    """psi_s(x) = s x under field multiplication."""
    s = spec.element(s)
    g = spec.group
    ms = spec.mul_matrix(s)

    def index_map(idx):
        return g.indices(g.coords(idx) @ ms.T)

    return Homomorphism(g, "field_mul", s, index_map)


# -- matrix rings ------------------------------------------------------------


@dataclass(frozen=True)
class MatrixRingSpec:
    """m x m matrices over Z_r or GF(q).

    An element is the flat tuple of its entries' coordinates in row-major
    order, so the additive group is base^(m^2) with the usual indexing.
    """

    base: BaseRing
    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise StructureError("matrix size must be >= 1")

    @cached_property
    def group(self) -> GroupSpec:
        return GroupSpec(self.base.group.moduli * (self.dim ** 2))

    @property
    def order(self) -> int:
        return self.base.order ** (self.dim ** 2)

    def __str__(self):
        return f"M{self.dim}({self.base})"

    def element(self, rows) -> tuple[int, ...]:
        """Flatten a nested m x m matrix of base elements."""
        rows = [list(r) for r in rows]
        if len(rows) != self.dim or any(len(r) != self.dim for r in rows):
            raise StructureError(f"expected a {self.dim}x{self.dim} matrix")
        return tuple(c for r in rows for e in r for c in self.base.element(e))

    def matrix(self, x) -> list[list[tuple[int, ...]]]:
        x = self.group.validate(x)
        w = self.base.group.rank
        flat = [x[i * w:(i + 1) * w] for i in range(self.dim ** 2)]
        return [flat[i * self.dim:(i + 1) * self.dim] for i in range(self.dim)]

    def identity(self) -> tuple[int, ...]:
        b = self.base
        return self.element([[b.one if i == j else b.zero for j in range(self.dim)]
                             for i in range(self.dim)])

    def matmul(self, x, y) -> tuple[int, ...]:
        b = self.base
        a, c = self.matrix(x), self.matrix(y)
        out = []
        for i in range(self.dim):
            row = []
            for j in range(self.dim):
                acc = b.zero
                for k in range(self.dim):
                    acc = b.add(acc, b.mul(a[i][k], c[k][j]))
                row.append(acc)
            out.append(row)
        return self.element(out)

    def entry_indices(self, idx) -> np.ndarray:
        """Base-ring index of every entry, shape (len(idx), m, m)."""
        d, q = self.dim, self.base.order
        flat = np.stack(np.unravel_index(np.asarray(idx, dtype=np.int64), (q,) * (d * d)), axis=-1)
        return flat.reshape(-1, d, d)

    def from_entry_indices(self, entries) -> np.ndarray:
        d, q = self.dim, self.base.order
        flat = np.asarray(entries).reshape(-1, d * d)
        return np.ravel_multi_index(tuple(flat.T), (q,) * (d * d))

    def _product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Entrywise-index matrix product; a, b broadcast over a leading axis."""
        add, mul = self.base.add_table, self.base.mul_table
        d = self.dim
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros_like(a)
        for i in range(d):
            for j in range(d):
                acc = np.zeros(a.shape[0], dtype=np.int64)
                for k in range(d):
                    acc = add[acc, mul[a[:, i, k], b[:, k, j]]]
                out[:, i, j] = acc
        return out


def _s_entries(ring: MatrixRingSpec, s) -> np.ndarray:
    s = ring.group.validate(s)
    return ring.entry_indices([ring.group.index_of(s)])


def matrix_left_hom(ring: MatrixRingSpec, s) -> Homomorphism:
    """X -> S X."""
    se = _s_entries(ring, s)

    def index_map(idx):
        return ring.from_entry_indices(ring._product(se, ring.entry_indices(idx)))

    return Homomorphism(ring.group, "matrix_left", ring.group.validate(s), index_map)


def matrix_right_hom(ring: MatrixRingSpec, s) -> Homomorphism:
    """X -> X S."""
    se = _s_entries(ring, s)

    def index_map(idx):
        return ring.from_entry_indices(ring._product(ring.entry_indices(idx), se))

    return Homomorphism(ring.group, "matrix_right", ring.group.validate(s), index_map)


def matrix_basis(ring: MatrixRingSpec, base_basis: CharacterBasis | None = None) -> CharacterBasis:
    """chi_Y(Z) = prod_{i,j} chi_{y_ij}(z_ji); note the transposed entry of Z."""
    base_basis = base_basis or base_ring_basis(ring.base)
    bg = ring.base.group
    d = ring.dim

    def pairing(y, z):
        ym, zm = ring.matrix(y), ring.matrix(z)
        value = 1 + 0j
        for i in range(d):
            for j in range(d):
                value *= base_basis.pairing(ym[i][j], zm[j][i])
        return complex(value)

    def row_builder(xs):
        bt = base_basis.table()
        ye = ring.entry_indices(xs)
        ze = ring.entry_indices(np.arange(ring.order))
        out = np.ones((len(xs), ring.order), dtype=complex)
        for i in range(d):
            for j in range(d):
                out *= bt[ye[:, i, j][:, None], ze[:, j, i][None, :]]
        return out

    if base_basis.group != bg:
        raise StructureError("base basis does not match the base ring")
    return CharacterBasis(ring.group, pairing, name=f"{ring} basis", row_builder=row_builder)


def matrix_character(ring: MatrixRingSpec, base_basis: CharacterBasis, y, z) -> complex:
    return matrix_basis(ring, base_basis)(y, z)


def check_base_ring_basis(ring: BaseRing, basis: CharacterBasis, tol: float = 1e-9) -> bool:
    """chi_y(s z) = chi_{y s}(z) for all s, y, z: what the matrix construction needs."""
    t = basis.table()
    mul = ring.mul_table
    n = ring.order
    for s in range(n):
        # lhs[y, z] = chi_y(s z); rhs[y, z] = chi_{y s}(z)
        if np.max(np.abs(t[:, mul[s]] - t[mul[:, s], :])) > tol:
            return False
    return True
