import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qent import config
from qent.errors import (
    DimensionMismatch,
    DimensionTooLarge,
    InvalidRank,
    InvariantViolation,
    NonRealExpectation,
    WeightsNotNormalized,
)
from qent.operators import (
    I2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    commutes,
    density_matrix,
    expectation,
    hermitian,
    ket,
    mixture_from_ensemble,
    projector,
    random_density,
    random_hermitian,
    random_pure_state,
    random_unitary,
    spectral_decomposition,
    state_vector,
    tensor_product,
    unitary,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestConstructors:
    def test_values_are_read_only(self):
        v = state_vector([1, 0])
        with pytest.raises(ValueError):
            v[0] = 2
        assert not PAULI_X.flags.writeable

    def test_bad_norm_names_invariant(self):
        with pytest.raises(InvariantViolation) as exc:
            state_vector([1, 1])
        assert exc.value.invariant == "norm = 1"
        assert exc.value.residual == pytest.approx(np.sqrt(2) - 1)

    def test_normalize(self):
        np.testing.assert_allclose(state_vector([1, 1], normalize=True), [2**-0.5, 2**-0.5])

    def test_non_hermitian(self):
        with pytest.raises(InvariantViolation, match="Hermitian"):
            hermitian([[0, 1], [0, 0]])

    def test_hermitian_within_tolerance(self):
        hermitian([[1, 1e-11], [0, 1]])

    def test_projector_checks(self):
        projector(np.diag([1, 0, 1]))
        with pytest.raises(InvariantViolation):
            projector(np.diag([1, 0.5]))

    def test_density_checks(self):
        density_matrix(np.eye(3) / 3)
        with pytest.raises(InvariantViolation, match="trace"):
            density_matrix(np.eye(2))
        with pytest.raises(InvariantViolation, match="positive"):
            density_matrix(np.diag([1.5, -0.5]))

    def test_unitary_checks(self):
        unitary(PAULI_Y)
        with pytest.raises(InvariantViolation):
            unitary(np.diag([1, 2]))

    def test_non_finite(self):
        with pytest.raises(InvariantViolation, match="finite"):
            hermitian([[np.nan, 0], [0, 1]])

    def test_dimension_cap(self):
        with config.override(max_dim=4):
            with pytest.raises(DimensionTooLarge):
                state_vector(np.ones(8) / np.sqrt(8))


class TestTensorProduct:
    def test_identity(self):
        np.testing.assert_array_equal(tensor_product(I2, I2), np.eye(4))

    def test_basis_index(self):
        np.testing.assert_array_equal(tensor_product(ket(2, 0), ket(2, 1)), ket(4, 1))

    def test_diagonal(self):
        z = np.diag([1, -1])
        np.testing.assert_array_equal(tensor_product(z, z), np.diag([1, -1, -1, 1]))

    @settings(max_examples=25, deadline=None)
    @given(seeds, st.integers(1, 2), st.integers(1, 2), st.integers(1, 4))
    def test_associative(self, seed, a, b, c):
        rng = np.random.default_rng(seed)
        x, y, z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in (a, b, c))
        lhs = tensor_product(tensor_product(x, y), z)
        rhs = tensor_product(x, tensor_product(y, z))
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestExpectation:
    def test_eigenvector(self):
        assert expectation(np.diag([1, -1]), ket(2, 0)) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        assert expectation(np.diag([1, -1]), np.eye(2) / 2) == pytest.approx(0.0)

    def test_pauli_x_plus(self):
        assert expectation(PAULI_X, np.array([1, 1]) / np.sqrt(2)) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            expectation(PAULI_Z, ket(3, 0))

    def test_non_real(self):
        # passes the Hermitian check at the default tolerance only when loosened
        a = np.array([[0, 1], [1 + 1e-6, 0]]) * 1j
        with config.override(tol_herm=1e-3):
            with pytest.raises(NonRealExpectation):
                expectation(a, np.array([1, 1]) / np.sqrt(2))

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_linear_in_state(self, seed):
        rng = np.random.default_rng(seed)
        a = random_hermitian(4, rng)
        r1, r2 = random_density(4, seed=rng), random_density(4, seed=rng)
        mix = expectation(a, (r1 + r2) / 2)
        assert abs(mix - (expectation(a, r1) + expectation(a, r2)) / 2) < 1e-12


class TestCommutes:
    def test_disjoint_legs(self):
        assert commutes(np.kron(PAULI_Z, I2), np.kron(I2, PAULI_X))

    def test_x_z(self):
        assert not commutes(PAULI_X, PAULI_Z)
        # oracle: [X, Z] = -2iY
        np.testing.assert_allclose(PAULI_X @ PAULI_Z - PAULI_Z @ PAULI_X, -2j * PAULI_Y)

    def test_self(self):
        p = random_hermitian(3, seed=1)
        assert commutes(p, p)


class TestSpectral:
    def test_diagonal(self):
        dec = spectral_decomposition(np.diag([1, -1]))
        assert [v for v, _ in dec] == pytest.approx([1, -1])
        np.testing.assert_allclose(dec[0][1], np.diag([1, 0]), atol=1e-14)
        np.testing.assert_allclose(dec[1][1], np.diag([0, 1]), atol=1e-14)

    def test_full_degeneracy(self):
        dec = spectral_decomposition(np.eye(3))
        assert len(dec) == 1
        assert dec[0][0] == pytest.approx(1)
        np.testing.assert_allclose(dec[0][1], np.eye(3), atol=1e-14)

    def test_pauli_x(self):
        dec = spectral_decomposition(PAULI_X)
        plus = np.array([1, 1]) / np.sqrt(2)
        minus = np.array([1, -1]) / np.sqrt(2)
        np.testing.assert_allclose(dec[0][1], np.outer(plus, plus), atol=1e-12)
        np.testing.assert_allclose(dec[1][1], np.outer(minus, minus), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 6))
    def test_unitary_invariance_and_resolution(self, seed, d):
        rng = np.random.default_rng(seed)
        a = random_hermitian(d, rng)
        u = random_unitary(d, rng)
        ev = [v for v, _ in spectral_decomposition(a)]
        ev_rot = [v for v, _ in spectral_decomposition(u @ a @ u.conj().T)]
        np.testing.assert_allclose(ev, ev_rot, atol=1e-9)
        projs = [p for _, p in spectral_decomposition(a)]
        assert np.max(np.abs(sum(projs) - np.eye(d))) < 1e-9
        for i, p in enumerate(projs):
            for q in projs[i + 1 :]:
                assert np.max(np.abs(p @ q)) < 1e-9

    def test_degenerate_block_merge(self):
        u = random_unitary(4, seed=3)
        a = u @ np.diag([2, 2, -1, 0]) @ u.conj().T
        dec = spectral_decomposition(a)
        assert len(dec) == 3
        assert np.trace(dec[0][1]).real == pytest.approx(2)


class TestMixture:
    def test_singleton(self):
        np.testing.assert_allclose(mixture_from_ensemble([1], [ket(2, 0)]), np.diag([1, 0]))

    def test_symmetric(self):
        np.testing.assert_allclose(mixture_from_ensemble([0.5, 0.5], [ket(2, 0), ket(2, 1)]), np.eye(2) / 2)

    def test_nonorthogonal(self):
        rho = mixture_from_ensemble([0.7, 0.3], [ket(2, 0), np.array([1, 1]) / np.sqrt(2)])
        assert np.trace(rho).real == pytest.approx(1)
        assert np.linalg.eigvalsh(rho)[0] > 0

    def test_weights_checked(self):
        with pytest.raises(WeightsNotNormalized):
            mixture_from_ensemble([0.5, 0.6], [ket(2, 0), ket(2, 1)])
        with pytest.raises(WeightsNotNormalized):
            mixture_from_ensemble([1.5, -0.5], [ket(2, 0), ket(2, 1)])


class TestRandom:
    def test_pure_norm(self):
        assert abs(np.linalg.norm(random_pure_state(4, 5)) - 1) < 1e-12

    def test_determinism(self):
        np.testing.assert_array_equal(random_pure_state(4, 11), random_pure_state(4, 11))
        np.testing.assert_array_equal(random_unitary(3, 11), random_unitary(3, 11))
        np.testing.assert_array_equal(random_density(5, 2, 11), random_density(5, 2, 11))

    def test_density_rank(self):
        ev = np.linalg.eigvalsh(random_density(4, 2, 9))
        assert np.sum(ev > 1e-9) == 2

    def test_invalid_rank(self):
        with pytest.raises(InvalidRank):
            random_density(3, 4, 0)

    def test_unitary_is_unitary(self):
        u = random_unitary(6, 2)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(6), atol=1e-12)
