import numpy as np
import pytest

from qent import relational
from qent.entanglement import werner_state
from qent.errors import DimensionMismatch, UnsupportedDimension
from qent.factorization import standard_factorization, twist_factorization
from qent.operators import pure_density, random_density, random_hermitian, random_pure_state, random_unitary
from qent.psa import build_powers_graph, psa_from_density
from qent.relational import (
    RelationThresholds,
    Verdict,
    classify_relation,
    has_effective_relation,
    has_intensive_relation,
    intensive_covariance,
)

F22 = standard_factorization(2, 2)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
P0 = np.diag([1.0, 0.0])


def psa_of(rho):
    rho = pure_density(rho) if np.asarray(rho).ndim == 1 else rho
    return psa_from_density(rho, build_powers_graph([], dim=rho.shape[0]))


def covariance_oracle(rho, p, q):
    d1, d2 = p.shape[0], q.shape[0]
    joint = np.trace(rho @ np.kron(p, q)).real
    return joint - np.trace(rho @ np.kron(p, np.eye(d2))).real * np.trace(rho @ np.kron(np.eye(d1), q)).real


def rank_one(v):
    return np.outer(v, v.conj())


def random_product_density(d1, d2, rng):
    return np.kron(random_density(d1, seed=rng), random_density(d2, seed=rng))


class TestThresholds:
    def test_defaults(self):
        th = RelationThresholds()
        assert th.tau_intensive == th.tau_effective == 1e-6

    @pytest.mark.parametrize("bad", [0.0, -1e-3, 0.1, 0.5])
    def test_range(self, bad):
        with pytest.raises(ValueError):
            RelationThresholds(tau_intensive=bad)
        with pytest.raises(ValueError):
            RelationThresholds(tau_effective=bad)


class TestIntensiveCovariance:
    def test_product_vanishes(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            psa = psa_of(random_product_density(2, 3, rng))
            p, q = rank_one(random_pure_state(2, rng)), rank_one(random_pure_state(3, rng))
            assert abs(intensive_covariance(psa, standard_factorization(2, 3), p, q)) < 1e-12

    def test_bell(self):
        assert intensive_covariance(psa_of(PHI_PLUS), F22, P0, P0) == pytest.approx(0.25, abs=1e-15)

    def test_maximally_mixed(self):
        p = rank_one(random_pure_state(2, 1))
        assert abs(intensive_covariance(psa_of(np.eye(4) / 4), F22, p, P0)) < 1e-15

    def test_matches_oracle_twisted(self):
        rng = np.random.default_rng(3)
        u = random_unitary(6, rng)
        f = twist_factorization(standard_factorization(2, 3), u)
        rho = random_density(6, seed=rng)
        p, q = random_hermitian(2, rng), random_hermitian(3, rng)
        aligned = u @ rho @ u.conj().T
        assert intensive_covariance(psa_of(rho), f, p, q) == pytest.approx(covariance_oracle(aligned, p, q), abs=1e-12)

    def test_multilinear(self):
        rng = np.random.default_rng(4)
        psa = psa_of(random_density(4, seed=rng))
        p1, p2, q = (random_hermitian(2, rng) for _ in range(3))
        a, b = rng.standard_normal(2)
        lhs = intensive_covariance(psa, F22, a * p1 + b * p2, q)
        rhs = a * intensive_covariance(psa, F22, p1, q) + b * intensive_covariance(psa, F22, p2, q)
        assert abs(lhs - rhs) < 1e-12
        lhs = intensive_covariance(psa, F22, q, a * p1 + b * p2)
        rhs = a * intensive_covariance(psa, F22, q, p1) + b * intensive_covariance(psa, F22, q, p2)
        assert abs(lhs - rhs) < 1e-12


class TestIntensiveRelation:
    def test_bell(self):
        found, w = has_intensive_relation(psa_of(PHI_PLUS), F22)
        assert found
        assert abs(w.covariance) == pytest.approx(0.25, abs=1e-12)
        assert w.stage == "exact"
        assert covariance_oracle(pure_density(PHI_PLUS), w.left, w.right) == pytest.approx(w.covariance, abs=1e-12)

    def test_product(self):
        rng = np.random.default_rng(5)
        found, w = has_intensive_relation(psa_of(random_product_density(2, 2, rng)), F22)
        assert not found
        assert abs(w.covariance) < 1e-12

    def test_classical_mixture(self):
        rho = np.diag([0.5, 0, 0, 0.5])
        found, w = has_intensive_relation(psa_of(rho), F22)
        assert found and abs(w.covariance) == pytest.approx(0.25, abs=1e-12)

    def test_deterministic(self):
        psa = psa_of(random_density(6, seed=2))
        f = standard_factorization(2, 3)
        a = has_intensive_relation(psa, f, seed=3)[1]
        b = has_intensive_relation(psa, f, seed=3)[1]
        assert a.covariance == b.covariance
        np.testing.assert_array_equal(a.left, b.left)

    def test_werner_monotone(self):
        covs = [has_intensive_relation(psa_of(werner_state(w)), F22)[1].covariance for w in np.linspace(0, 1, 21)]
        covs = np.abs(covs)
        assert np.all(np.diff(covs) >= -1e-12)
        # oracle: |cov| = w/4 at the computational pair
        np.testing.assert_allclose(covs, np.linspace(0, 1, 21) / 4, atol=1e-12)


class TestEffectiveRelation:
    def test_bell(self):
        found, w = has_effective_relation(psa_of(PHI_PLUS), F22)
        assert found
        assert w.off_mass < 1e-12
        assert w.supported_outcomes == 2
        assert w.exact_search
        # oracle: joint distribution in the returned bases
        m = np.kron(w.left_basis, w.right_basis)
        p = np.einsum("ia,ij,ja->a", m.conj(), pure_density(PHI_PLUS), m).real.reshape(2, 2)
        assert sum(p[i, j] for i, j in w.permutation) == pytest.approx(1.0, abs=1e-12)

    def test_bell_computational_identity(self):
        found, w = has_effective_relation(psa_of(PHI_PLUS), F22)
        np.testing.assert_allclose(np.abs(w.left_basis), np.eye(2), atol=1e-12)
        assert w.permutation == ((0, 0), (1, 1))

    def test_ket00_is_trivial(self):
        psi = np.zeros(4)
        psi[0] = 1
        found, w = has_effective_relation(psa_of(psi), F22)
        assert not found
        assert w.supported_outcomes < 2 or w.off_mass > 1e-6

    def test_werner_half(self):
        found, w = has_effective_relation(psa_of(werner_state(0.5)), F22, seed=1)
        assert not found
        assert w.off_mass > 0.1

    def test_qutrit_partner(self):
        # injective correlation from a qubit into a qutrit
        psi = np.zeros(6, dtype=complex)
        psi[0] = psi[5] = 1 / np.sqrt(2)
        found, w = has_effective_relation(psa_of(psi), standard_factorization(2, 3))
        assert found and w.off_mass < 1e-9

    def test_hidden_bases(self):
        # a correlation that only shows in rotated local bases
        rng = np.random.default_rng(6)
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        found, _ = has_effective_relation(psa_of(u @ PHI_PLUS), F22)
        assert found

    def test_degenerate_split(self):
        with pytest.raises(UnsupportedDimension):
            has_effective_relation(psa_of(random_density(4, seed=0)), standard_factorization(1, 4))


class TestClassify:
    def test_bell(self):
        r = classify_relation(psa_of(PHI_PLUS), F22)
        assert r.verdict is Verdict.QUANTUM_ENTANGLEMENT
        assert r.anomaly is None

    def test_product(self):
        r = classify_relation(psa_of(random_product_density(2, 2, np.random.default_rng(1))), F22)
        assert r.verdict is Verdict.RELATIONAL_SEPARABILITY
        assert r.intensive_witness is None and r.effective_witness is None

    def test_werner_half(self):
        r = classify_relation(psa_of(werner_state(0.5)), F22)
        assert r.verdict is Verdict.INTENSIVE_CORRELATION
        assert r.max_covariance == pytest.approx(0.125, abs=1e-12)

    def test_classical_mixture_fires_both(self):
        r = classify_relation(psa_of(np.diag([0.5, 0, 0, 0.5])), F22)
        assert r.verdict is Verdict.QUANTUM_ENTANGLEMENT

    def test_maximally_mixed(self):
        assert classify_relation(psa_of(np.eye(4) / 4), F22).verdict is Verdict.RELATIONAL_SEPARABILITY

    @pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
    def test_products_never_related(self, dims):
        rng = np.random.default_rng(sum(dims))
        f = standard_factorization(*dims)
        for k in range(100):
            if k % 2:
                rho = random_product_density(*dims, rng)
            else:
                rho = pure_density(np.kron(random_pure_state(dims[0], rng), random_pure_state(dims[1], rng)))
            r = classify_relation(psa_of(rho), f, seed=k)
            assert r.verdict is Verdict.RELATIONAL_SEPARABILITY
            assert r.anomaly is None

    def test_factorization_covariance(self):
        rng = np.random.default_rng(9)
        for k in range(30):
            u = random_unitary(4, rng)
            kind = k % 4
            if kind == 0:
                rho = random_product_density(2, 2, rng)
            elif kind == 1:
                rho = pure_density(random_pure_state(4, rng))
            elif kind == 2:
                rho = werner_state(rng.uniform(0.1, 0.9))
            else:
                rho = random_density(4, seed=rng)
            direct = classify_relation(psa_of(rho), twist_factorization(F22, u), seed=k)
            moved = classify_relation(psa_of(u @ rho @ u.conj().T), F22, seed=k)
            assert direct.verdict is moved.verdict

    def test_anomaly_path(self, monkeypatch):
        fake = relational.IntensiveWitness(P0, P0, 0.0, "exact")
        monkeypatch.setattr(relational, "has_intensive_relation", lambda *a, **k: (False, fake))
        r = classify_relation(psa_of(PHI_PLUS), F22)
        assert r.verdict is Verdict.RELATIONAL_SEPARABILITY
        assert r.anomaly == "EffectiveWithoutIntensive"
        assert r.effective_witness is None

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            classify_relation(psa_of(np.eye(6) / 6), F22)
