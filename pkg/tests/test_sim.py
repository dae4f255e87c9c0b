import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qftlab.errors import IntegrityError, PreconditionError, StructureError
from qftlab.fields import FieldSpec, field_basis, mul_hom
from qftlab.groups import GroupSpec, cyclic, diagonal_hom, product_basis, table_hom
from qftlab.sim import (
    DenseOperator,
    IndexMapOperator,
    QFTOperator,
    StateVector,
    a_psi,
    apply,
    b_psi,
    fourier_state,
    inversion_residual,
    inversion_trace,
    measure_register,
    permutation_op,
    qft,
    qft_matrix,
    tensor_apply,
    translation_op,
    verify_inversion,
    verify_inversion_pair,
)


def random_state(n, rng, registers=1):
    v = rng.normal(size=n**registers) + 1j * rng.normal(size=n**registers)
    return v / np.linalg.norm(v)


def perm_matrix(images):
    m = np.zeros((len(images), len(images)))
    for col, row in enumerate(images):
        m[row, col] = 1
    return m


class TestQFT:
    def test_z2_is_hadamard(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.max(np.abs(qft_matrix(product_basis(cyclic(2))) - h)) < 1e-15

    @pytest.mark.parametrize("m", [3, 5, 8, 12])
    def test_cyclic_is_dft(self, m):
        want = np.array([[cmath.exp(2j * cmath.pi * j * k / m) for k in range(m)] for j in range(m)])
        assert np.max(np.abs(qft_matrix(product_basis(cyclic(m))) - want / np.sqrt(m))) < 1e-12

    @pytest.mark.parametrize("moduli", [(2,), (7,), (4, 2), (3, 3), (2, 2, 2)])
    def test_unitary(self, moduli):
        f = qft(product_basis(GroupSpec(moduli)))
        assert f.unitarity_defect() <= 1e-9
        assert f.is_unitary()

    def test_field_qft_unitary(self):
        assert qft(field_basis(FieldSpec.of_order(9))).unitarity_defect() <= 1e-9

    @pytest.mark.parametrize("adjoint", [False, True])
    def test_functional_matches_dense(self, adjoint):
        b = product_basis(cyclic(6, 5))
        rng = np.random.default_rng(0)
        v = random_state(30, rng)
        dense = qft_matrix(b)
        dense = dense.conj().T if adjoint else dense
        got = QFTOperator(b, adjoint=adjoint, block=7).apply(v)
        assert np.max(np.abs(got - dense @ v)) <= 1e-12


class TestStates:
    def test_fourier_state_normalised(self):
        b = product_basis(cyclic(12))
        for x in b.group.elements():
            assert fourier_state(b, x).norm() == pytest.approx(1)

    def test_fourier_states_orthonormal(self):
        b = product_basis(cyclic(12))
        states = [fourier_state(b, x) for x in b.group.elements()]
        gram = np.array([[s.inner(t) for t in states] for s in states])
        assert np.max(np.abs(gram - np.eye(12))) <= 1e-9

    def test_basis_two_register_index(self):
        g = cyclic(3)
        s = StateVector.basis(g, (1,), (2,))
        assert s.registers == 2 and np.argmax(np.abs(s.amps)) == 1 * 3 + 2

    def test_amplitude_count_checked(self):
        with pytest.raises(StructureError):
            StateVector(cyclic(3), np.ones(4), 1)


class TestOperators:
    def test_translation_examples(self):
        g = cyclic(5)
        s = apply(translation_op(g, (2,)), StateVector.basis(g, (4,)))
        assert np.argmax(np.abs(s.amps)) == 1
        g = cyclic(4, 2)
        t = translation_op(g, (1, 1))
        assert g.element_of(int(t.perm[g.index_of((3, 1))])) == (0, 0)

    @pytest.mark.parametrize("m", [5, 8])
    def test_eigenrelation(self, m):
        # P_y |F_{-x}> = chi_x(y) |F_{-x}>, with |F_u> = F|u> = fourier_state(x) at u = -x
        g = cyclic(m)
        b = product_basis(g)
        f = qft(b)
        for x in g.elements():
            v = fourier_state(b, x)
            direct = apply(f, StateVector.basis(g, g.neg(x)))
            assert np.max(np.abs(v.amps - direct.amps)) <= 1e-12
            for y in g.elements():
                w = apply(translation_op(g, y), v)
                assert np.max(np.abs(w.amps - b(x, y) * v.amps)) <= 1e-9

    def test_translation_invariance(self):
        g = cyclic(4, 3)
        b = product_basis(g)
        for y in g.elements():
            v = fourier_state(b, y)
            for x in g.elements():
                w = apply(translation_op(g, x), v)
                assert np.max(np.abs(w.amps - b(y, x) * v.amps)) <= 1e-9

    def test_literal_sign_convention_gives_conjugate(self):
        # taking |chi_{-x}> = fourier_state(-x) instead yields the conjugate eigenvalue
        g = cyclic(5)
        b = product_basis(g)
        x, y = (1,), (1,)
        v = fourier_state(b, g.neg(x))
        w = apply(translation_op(g, y), v)
        assert np.max(np.abs(w.amps - np.conj(b(x, y)) * v.amps)) <= 1e-9
        assert np.max(np.abs(w.amps - b(x, y) * v.amps)) > 0.1

    def test_a_psi_is_cnot_on_z2(self):
        psi = diagonal_hom(cyclic(2), (1,))
        cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
        np.testing.assert_array_equal(a_psi(psi).to_dense(), cnot)

    def test_a_psi_z3_example(self):
        g = cyclic(3)
        s = apply(a_psi(diagonal_hom(g, (2,))), StateVector.basis(g, (1,), (1,)))
        assert np.argmax(np.abs(s.amps)) == 1 * 3 + 0

    def test_b_psi_matches_definition(self):
        g = cyclic(4)
        psi = diagonal_hom(g, (3,))
        want = perm_matrix([((x + 3 * y) % 4) * 4 + y for x in range(4) for y in range(4)])
        np.testing.assert_array_equal(b_psi(psi).to_dense(), want)

    def test_random_permutations_unitary(self):
        g = cyclic(8)
        rng = np.random.default_rng(5)
        for _ in range(100):
            u = permutation_op(g, rng.permutation(8))
            assert u.unitarity_defect() <= 1e-9
            assert np.max(np.abs(u.to_dense().T @ u.to_dense() - np.eye(8))) <= 1e-9

    def test_non_bijection_rejected(self):
        with pytest.raises(StructureError):
            permutation_op(cyclic(3), [0, 0, 1])

    def test_composite_and_adjoint(self):
        g = cyclic(6)
        f = qft(product_basis(g))
        t = translation_op(g, (1,))
        comp = f.adjoint() @ t @ f
        dense = f.to_dense().conj().T @ t.to_dense() @ f.to_dense()
        v = random_state(6, np.random.default_rng(1))
        assert np.max(np.abs(comp.apply(v) - dense @ v)) <= 1e-12
        assert comp.unitarity_defect() <= 1e-9
        # conjugated shift is diagonal
        assert np.max(np.abs(dense - np.diag(np.diag(dense)))) <= 1e-12

    def test_phased_index_map(self):
        op = IndexMapOperator([1, 0], phases=[1j, -1])
        np.testing.assert_allclose(op.to_dense(), [[0, -1], [1j, 0]])
        assert op.unitarity_defect() <= 1e-12


class TestTensorAndMeasure:
    @settings(max_examples=20)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_functional_matches_kron(self, m, seed):
        g = cyclic(m)
        rng = np.random.default_rng(seed)
        u = qft(product_basis(g))
        v = permutation_op(g, rng.permutation(m))
        s = StateVector(g, random_state(m, rng, 2), 2)
        fast = tensor_apply(u, v, s)
        slow = tensor_apply(u, v, s, dense=True)
        assert np.max(np.abs(fast.amps - slow.amps)) <= 1e-10
        ref = np.kron(u.to_dense(), v.to_dense()) @ s.amps
        assert np.max(np.abs(fast.amps - ref)) <= 1e-10

    def test_measure_product_state(self):
        g = cyclic(3)
        s = StateVector.basis(g, (2,), (0,))
        d = measure_register(s, 1)
        assert d.probability((2,)) == 1 and d.deterministic() == (2,)
        assert measure_register(s, 2).deterministic() == (0,)

    def test_measure_uniform(self):
        g = cyclic(4)
        s = StateVector(g, np.full(16, 0.25), 2)
        d = measure_register(s)
        np.testing.assert_allclose(d.probs, 0.25)
        assert d.deterministic() is None
        assert len(d.sample(0, size=10)) == 10

    def test_bad_norm_raises(self):
        g = cyclic(2)
        s = StateVector(g, [1, 1, 0, 0], 2)
        with pytest.raises(IntegrityError):
            measure_register(s)
        with pytest.raises(IntegrityError):
            apply(DenseOperator(np.eye(2) * 2), StateVector.basis(g, (0,)))


class TestInversion:
    def test_z2_against_hand_built_matrices(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        cnot_12 = perm_matrix([0, 1, 3, 2])  # control register 1
        cnot_21 = perm_matrix([0, 3, 2, 1])  # control register 2
        lhs = np.kron(h, h) @ cnot_12 @ np.kron(h, h)
        assert np.max(np.abs(lhs - cnot_21)) <= 1e-12
        psi = diagonal_hom(cyclic(2), (1,))
        np.testing.assert_array_equal(b_psi(psi).to_dense(), cnot_21)
        assert verify_inversion(product_basis(cyclic(2)), psi) <= 1e-12

    @pytest.mark.parametrize("moduli,s", [((5,), (3,)), ((4, 2), (3, 1)), ((3, 3), (2, 0)), ((6,), (4,))])
    def test_methods_agree(self, moduli, s):
        b = product_basis(GroupSpec(moduli))
        psi = diagonal_hom(b.group, s)
        kron = inversion_residual(b, psi, psi, method="kron")
        cols = inversion_residual(b, psi, psi, method="columns", block_entries=50)
        assert kron <= 1e-9 and cols <= 1e-9

    def test_gf8_all_s(self):
        f = FieldSpec.of_order(8)
        b = field_basis(f)
        for s in f.elements():
            assert verify_inversion(b, mul_hom(f, s)) <= 1e-9

    def test_incompatible_raises(self):
        g = cyclic(2, 2)
        proj = table_hom(g, lambda v: (v[0], 0))
        b = product_basis(g)
        # a shear is a homomorphism but not self-adjoint for the pairing
        psi = table_hom(g, lambda v: ((v[0] + v[1]) % 2, v[1]))
        with pytest.raises(PreconditionError):
            verify_inversion(b, psi)
        with pytest.raises(PreconditionError):
            verify_inversion_pair(b, psi, proj)
        # and it really breaks the identity
        assert inversion_residual(b, psi, psi, method="kron") > 0.1

    def test_pair_residual(self):
        g = cyclic(4, 2)
        psi = diagonal_hom(g, (3, 1))
        assert verify_inversion_pair(product_basis(g), psi, psi) <= 1e-9

    def test_trace_steps(self):
        g = cyclic(5)
        b = product_basis(g)
        psi = diagonal_hom(g, (2,))
        for x in g.elements():
            for y in g.elements():
                steps = inversion_trace(b, psi, x, y)
                assert set(steps) == {"prepare", "query", "finish"}
                assert max(steps.values()) <= 1e-9

    def test_unknown_method(self):
        b = product_basis(cyclic(2))
        psi = diagonal_hom(b.group, (1,))
        with pytest.raises(ValueError):
            inversion_residual(b, psi, psi, method="magic")
