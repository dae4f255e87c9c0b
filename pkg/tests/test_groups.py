import cmath
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qftlab.errors import CapExceeded, StructureError
from qftlab.groups import (
    GroupSpec,
    check_compatibility,
    check_pair_compatibility,
    cyclic,
    diagonal_hom,
    identity_hom,
    product_basis,
    table_hom,
    verify_homomorphism,
    verify_orthogonality,
    zero_hom,
)

moduli_lists = st.lists(st.integers(2, 7), min_size=1, max_size=3)


def brute_character(moduli, x, y):
    return cmath.exp(2j * cmath.pi * sum(a * b / m for a, b, m in zip(x, y, moduli)))


class TestArithmetic:
    def test_add_examples(self):
        assert cyclic(4, 2).add((3, 1), (2, 1)) == (1, 0)
        assert cyclic(5).add((2,), (3,)) == (0,)
        g = cyclic(3, 4)
        assert all(g.add(x, g.zero) == x for x in g.elements())

    def test_neg_and_sub(self):
        g = cyclic(6, 4)
        for x in g.elements():
            assert g.add(x, g.neg(x)) == g.zero
            assert g.sub(x, x) == g.zero

    def test_mismatched_element(self):
        with pytest.raises(StructureError):
            cyclic(4, 2).add((1,), (1, 1))

    def test_indexing_examples(self):
        assert cyclic(4, 2).element_of(5) == (2, 1)
        assert cyclic(3, 3).index_of((2, 1)) == 7
        assert cyclic(7, 2).element_of(0) == (0, 0)

    def test_out_of_range_index(self):
        with pytest.raises(IndexError):
            cyclic(4).element_of(4)

    def test_modulus_one_rejected(self):
        with pytest.raises(StructureError):
            GroupSpec((3, 1))

    @given(moduli_lists)
    def test_index_round_trip(self, moduli):
        g = GroupSpec(tuple(moduli))
        idx = np.arange(g.order)
        assert all(g.index_of(g.element_of(i)) == i for i in range(g.order))
        np.testing.assert_array_equal(g.indices(g.coords(idx)), idx)
        # vectorised coordinates agree with the scalar decoder
        assert [tuple(c) for c in g.coords(idx)] == list(g.elements())

    @settings(max_examples=20)
    @given(moduli_lists)
    def test_group_axioms(self, moduli):
        g = GroupSpec(tuple(moduli))
        els = list(g.elements())
        for x, y in itertools.product(els, repeat=2):
            assert g.add(x, y) == g.add(y, x)
        for x, y, z in itertools.islice(itertools.product(els, repeat=3), 500):
            assert g.add(g.add(x, y), z) == g.add(x, g.add(y, z))


class TestCharacters:
    def test_small_values(self):
        assert product_basis(cyclic(2))((1,), (1,)) == pytest.approx(-1)
        assert product_basis(cyclic(4))((1,), (1,)) == pytest.approx(1j)
        b = product_basis(cyclic(3, 5))
        assert all(b(x, (0, 0)) == pytest.approx(1) for x in b.group.elements())

    @pytest.mark.parametrize("moduli", [(2,), (12,), (4, 2), (3, 3), (2, 3, 2)])
    def test_table_matches_direct_formula(self, moduli):
        g = GroupSpec(moduli)
        t = product_basis(g).table()
        want = np.array([[brute_character(moduli, x, y) for y in g.elements()] for x in g.elements()])
        assert np.max(np.abs(t - want)) < 1e-12

    def test_pairing_matches_rows(self):
        b = product_basis(cyclic(6, 4))
        t = b.table()
        for i, x in enumerate(b.group.elements()):
            for j, y in enumerate(b.group.elements()):
                assert abs(b(x, y) - t[i, j]) < 1e-12

    def test_orthogonality_z2_is_exact(self):
        assert verify_orthogonality(product_basis(cyclic(2))) <= 1e-12

    def test_orthogonality_z12_direct_summation(self):
        # independent oracle: explicit double loop over the Schur relation
        n = 12
        worst = 0.0
        for i in range(n):
            for j in range(n):
                s = sum(cmath.exp(2j * cmath.pi * i * x / n) * cmath.exp(-2j * cmath.pi * j * x / n)
                        for x in range(n)) / n
                worst = max(worst, abs(s - (i == j)))
        assert worst <= 1e-9
        assert verify_orthogonality(product_basis(cyclic(12))) <= 1e-9

    @settings(max_examples=15)
    @given(moduli_lists)
    def test_multiplicative_unit_and_symmetric(self, moduli):
        g = GroupSpec(tuple(moduli))
        t = product_basis(g).table()
        assert np.allclose(np.abs(t), 1, atol=1e-9)
        assert np.allclose(t, t.T, atol=1e-12)
        assert np.allclose(t[0], 1)
        for x in range(g.order):
            for y in range(g.order):
                s = g.add_indices([x], [y])[0]
                assert np.max(np.abs(t[s] - t[x] * t[y])) <= 1e-9

    def test_dense_cap(self):
        with pytest.raises(CapExceeded):
            product_basis(cyclic(64, 65)).table()
        # construction and single evaluations beyond the cap are fine
        assert abs(product_basis(cyclic(64, 65))((1, 1), (1, 1))) == pytest.approx(1)


class TestHomomorphisms:
    def test_diagonal_examples(self):
        assert diagonal_hom(cyclic(6), (5,))((4,)) == (2,)
        assert diagonal_hom(cyclic(2, 3), (1, 2))((1, 2)) == (1, 1)
        z = diagonal_hom(cyclic(4, 3), (0, 0))
        assert all(z(x) == (0, 0) for x in z.group.elements())

    @settings(max_examples=20)
    @given(moduli_lists, st.data())
    def test_every_diagonal_is_a_compatible_homomorphism(self, moduli, data):
        g = GroupSpec(tuple(moduli))
        s = tuple(data.draw(st.integers(0, m - 1)) for m in moduli)
        psi = diagonal_hom(g, s)
        assert verify_homomorphism(psi)
        assert check_compatibility(product_basis(g), psi)
        assert psi(g.zero) == g.zero

    def test_square_map_fails_with_witness(self):
        # oracle: first pair in lexicographic order where (x+y)^2 != x^2 + y^2 mod 5
        want = next((x, y) for x in range(5) for y in range(5)
                    if ((x + y) ** 2 - x * x - y * y) % 5)
        res = verify_homomorphism(table_hom(cyclic(5), lambda x: (x[0] ** 2,)))
        assert not res
        assert res.witness == ((want[0],), (want[1],)) == ((1,), (1,))

    def test_identity_table(self):
        assert verify_homomorphism(table_hom(cyclic(3), [0, 1, 2]))

    def test_sampled_mode(self):
        g = cyclic(97, 89)
        assert verify_homomorphism(diagonal_hom(g, (5, 7)), sampled=True, trials=500, rng=1)
        with pytest.raises(CapExceeded):
            verify_homomorphism(diagonal_hom(g, (5, 7)))
        bad = table_hom(cyclic(7), lambda x: ((x[0] ** 2) % 7,))
        assert not verify_homomorphism(bad, sampled=True, trials=200, rng=0)

    def test_zero_map_compatible(self):
        g = cyclic(4, 6)
        assert check_compatibility(product_basis(g), zero_hom(g))

    def test_swap_on_z2_z2(self):
        # oracle: chi_x(y) = (-1)^{x.y}; swap compatible iff (-1)^{y.sw(z)} = (-1)^{sw(y).z}
        def chi(x, y):
            return (-1) ** (x[0] * y[0] + x[1] * y[1])

        def sw(v):
            return (v[1], v[0])

        pairs = list(itertools.product([(a, b) for a in (0, 1) for b in (0, 1)], repeat=2))
        oracle = all(chi(y, sw(z)) == chi(sw(y), z) for y, z in pairs)
        g = cyclic(2, 2)
        res = check_compatibility(product_basis(g), table_hom(g, sw))
        assert res.checked == 16
        assert res.ok is oracle is True

    def test_pair_reduces_to_single(self):
        g = cyclic(4, 2)
        psi = diagonal_hom(g, (3, 1))
        assert check_pair_compatibility(product_basis(g), psi, psi)

    def test_pair_distinct_scalars_on_z5_fail(self):
        b = product_basis(cyclic(5))
        for s, t in itertools.permutations(range(1, 5), 2):
            res = check_pair_compatibility(b, diagonal_hom(b.group, (s,)), diagonal_hom(b.group, (t,)))
            assert not res
            kind, y, z = res.witness
            assert kind == "character"
            # the witness really violates chi_y(s z) = chi_{t y}(z)
            assert (y[0] * s * z[0] - t * y[0] * z[0]) % 5 != 0

    def test_pair_commutation_witness(self):
        g = cyclic(2, 2)
        swap = table_hom(g, lambda v: (v[1], v[0]))
        proj = table_hom(g, lambda v: (v[0], 0))
        res = check_pair_compatibility(product_basis(g), swap, proj)
        assert not res and res.witness[0] == "commute"

    def test_identity_hom(self):
        g = cyclic(3, 4)
        assert all(identity_hom(g)(x) == x for x in g.elements())
