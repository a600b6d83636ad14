"""
Tests for Schmidt decompositions, Kraus-rank certificates and witnesses.

Run with: pytest test/test_schmidt.py
"""
import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pebkit.channels import ChoiMatrix, KrausSet, kraus_to_choi, mix_kraus
from pebkit.errors import PreconditionError
from pebkit.model.config import SearchConfig
from pebkit import schmidt
from pebkit.numerics import haar_random_unitary, numerical_rank
from pebkit.schmidt import (
    kraus_max_rank,
    maximally_entangled_fraction,
    minimize_kraus_rank,
    rank_k_representation,
    schmidt_decompose,
    schmidt_rank,
    sn_bounds,
    sn_lower_bound,
    sn_lower_bound_fidelity,
    sn_lower_bound_ppt,
    sn_upper_search,
)
from pebkit.zoo import dephasing, depolarizing, random_rank_k_channel, unitary_channel


def completely_depolarizing(d: int) -> KrausSet:
    ops = []
    for i in range(d):
        for j in range(d):
            A = np.zeros((d, d), dtype=complex)
            A[i, j] = 1 / np.sqrt(d)
            ops.append(A)
    return KrausSet(tuple(ops))


def phi(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


# =============================================================================
# Pure states
# =============================================================================

class TestSchmidtDecompose:
    def test_bell_state(self):
        dec = schmidt_decompose(phi(2), 2, 2)
        assert dec.rank == 2
        assert_allclose(dec.coefficients, [1 / np.sqrt(2)] * 2, atol=1e-12)

    def test_product_state(self):
        dec = schmidt_decompose([1, 0, 0, 0], 2, 2)
        assert dec.rank == 1
        assert_allclose(dec.coefficients, [1], atol=1e-12)

    def test_factorizable(self):
        """(|00⟩+|01⟩)/√2 = |0⟩⊗|+⟩ has rank 1."""
        assert schmidt_rank(np.array([1, 1, 0, 0]) / np.sqrt(2), 2, 2) == 1

    def test_reconstruct_and_normalization(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        v /= np.linalg.norm(v)
        dec = schmidt_decompose(v, 3, 4)
        assert dec.rank == 3
        assert np.sum(dec.coefficients**2) == pytest.approx(1, abs=1e-10)
        assert_allclose(dec.reconstruct(), v, atol=1e-12)


class TestSchmidtRank:
    def test_maximally_entangled_qutrits(self):
        assert schmidt_rank(phi(3), 3, 3) == 3

    def test_padded_bell_state(self):
        v = np.zeros(9, dtype=complex)
        v[0] = v[4] = 1 / np.sqrt(2)
        assert schmidt_rank(v, 3, 3) == 2


# =============================================================================
# Kraus ranks and the search
# =============================================================================

class TestKrausMaxRank:
    def test_identity(self):
        assert kraus_max_rank(KrausSet((np.eye(3),))) == 3

    def test_completely_depolarizing(self):
        assert kraus_max_rank(completely_depolarizing(3)) == 1

    def test_amplitude_damping(self):
        g = 0.5
        K = KrausSet((np.diag([1, np.sqrt(1 - g)]), np.array([[0, np.sqrt(g)], [0, 0]])))
        assert kraus_max_rank(K) == 2


class TestMinimizeKrausRank:
    def test_identity_trivial(self):
        cert = minimize_kraus_rank(KrausSet((np.eye(2),)), 2)
        assert cert.achieved
        assert cert.max_rank_found == 2

    def test_scrambled_depolarizing(self):
        """A Haar-scrambled rank-1 set of the d=2 depolarizer is unscrambled."""
        K = mix_kraus(completely_depolarizing(2), haar_random_unitary(4, 13))
        assert kraus_max_rank(K) == 2
        cert = minimize_kraus_rank(K, 1, SearchConfig(seed=1))
        assert cert.achieved
        assert cert.residual < 1e-12
        assert kraus_max_rank(cert.witness_kraus) == 1

    def test_scrambled_rank_two(self):
        """Planted rank-2 operators on d=3 are recovered after scrambling."""
        spec = random_rank_k_channel(3, 2, 3, seed=5, scramble=True)
        cert = minimize_kraus_rank(spec.kraus, 2, SearchConfig(seed=2))
        assert cert.achieved
        witness = cert.witness_kraus
        assert all(numerical_rank(A) <= 2 for A in witness.operators)
        assert np.max(np.abs(kraus_to_choi(witness).matrix - kraus_to_choi(spec.kraus).matrix)) <= 1e-8

    def test_target_out_of_range(self):
        with pytest.raises(PreconditionError):
            minimize_kraus_rank(KrausSet((np.eye(2),)), 3)

    def test_deterministic(self):
        spec = random_rank_k_channel(3, 2, 3, seed=9, scramble=True)
        a = minimize_kraus_rank(spec.kraus, 2, SearchConfig(seed=4, restarts=4))
        b = minimize_kraus_rank(spec.kraus, 2, SearchConfig(seed=4, restarts=4))
        assert a.restart == b.restart
        assert_allclose(a.mixing_unitary, b.mixing_unitary)

    def test_parallel_matches_sequential(self):
        """Worker threads pick the same certificate as the sequential loop."""
        spec = random_rank_k_channel(3, 1, 3, seed=12, scramble=True)
        seq = minimize_kraus_rank(spec.kraus, 1, SearchConfig(seed=3, restarts=6))
        par = minimize_kraus_rank(spec.kraus, 1, SearchConfig(seed=3, restarts=6, workers=3))
        assert seq.achieved == par.achieved
        assert seq.restart == par.restart

    def test_unreachable_target_is_inconclusive(self):
        """An identity channel never reaches rank 1; the certificate says so."""
        cert = minimize_kraus_rank(KrausSet((np.eye(2),)), 1, SearchConfig(restarts=2, max_iters=50))
        assert not cert.achieved
        assert cert.witness_kraus is None
        assert cert.max_rank_found == 2


class TestSnUpperSearch:
    def test_completely_depolarizing_qutrit(self):
        """Weyl-basis operators are all full rank; the optimizer must reach 1."""
        K = depolarizing(3, 1.0).kraus
        assert kraus_max_rank(K) == 3
        assert sn_upper_search(K) == 1

    def test_scrambled_completely_depolarizing_qutrit(self):
        K = mix_kraus(completely_depolarizing(3), haar_random_unitary(9, 31))
        assert kraus_max_rank(K) == 3
        assert sn_upper_search(K) == 1

    def test_unitary(self):
        assert sn_upper_search(unitary_channel(3, seed=1).kraus) == 3

    def test_scan_continues_past_inconclusive_k(self, monkeypatch):
        """An inconclusive k does not end the scan; the smallest achieved k wins."""
        real = schmidt.minimize_kraus_rank

        def stalls_at_two(K, target_k, config=None):
            cert = real(K, target_k, config)
            return dataclasses.replace(cert, achieved=False, witness_kraus=None) if target_k == 2 else cert

        monkeypatch.setattr(schmidt, "minimize_kraus_rank", stalls_at_two)
        spec = random_rank_k_channel(3, 1, 3, seed=12, scramble=True)
        bounds = sn_bounds(spec.kraus)
        assert [a.target_k for a in bounds.attempts] == [2, 1]
        assert not bounds.attempts[0].achieved
        assert bounds.upper == 1
        assert bounds.certificate.target_k == 1

    def test_hierarchy(self):
        """A channel certified in O_1 is also certified in O_2."""
        spec = random_rank_k_channel(3, 1, 3, seed=12, scramble=True)
        low = minimize_kraus_rank(spec.kraus, 1, SearchConfig(seed=3))
        high = minimize_kraus_rank(spec.kraus, 2, SearchConfig(seed=3))
        assert low.achieved and high.achieved
        assert kraus_max_rank(low.witness_kraus) <= 2
        assert kraus_max_rank(high.witness_kraus) <= 2

    def test_dephasing_entangled(self):
        """K={√0.75 I, √0.25 Z}: the Choi state is NPT so 1 is never reached."""
        K = dephasing(2, 0.25).kraus
        bounds = sn_bounds(K)
        assert bounds.lower == 2
        assert bounds.upper == 2


# =============================================================================
# Witnesses
# =============================================================================

class TestLowerBounds:
    def test_identity(self):
        J = kraus_to_choi(KrausSet((np.eye(3),)))
        assert maximally_entangled_fraction(J) == pytest.approx(1)
        assert sn_lower_bound_fidelity(J) == 3

    def test_completely_depolarizing(self):
        J = kraus_to_choi(completely_depolarizing(3))
        assert maximally_entangled_fraction(J) == pytest.approx(1 / 9)
        assert sn_lower_bound_fidelity(J) == 1
        assert sn_lower_bound_ppt(J) == 1

    def test_padded_bell_choi(self):
        """|Φ₂⟩ padded into 3⊗3 has F = 2/3, hence a bound of 2."""
        v = np.zeros(9, dtype=complex)
        v[0] = v[4] = 1 / np.sqrt(2)
        J = ChoiMatrix(d=3, matrix=np.outer(v, v.conj()))
        assert maximally_entangled_fraction(J) == pytest.approx(2 / 3)
        assert sn_lower_bound_fidelity(J) == 2

    def test_ppt_detects_amplitude_damping(self):
        g = 0.5
        K = KrausSet((np.diag([1, np.sqrt(1 - g)]), np.array([[0, np.sqrt(g)], [0, 0]])))
        assert sn_lower_bound_ppt(kraus_to_choi(K)) == 2

    def test_pure_choi_is_exact(self):
        """A unitary has a pure Choi state of Schmidt rank d."""
        for seed in (1, 4, 23):
            J = kraus_to_choi(unitary_channel(3, seed=seed).kraus)
            assert sn_lower_bound(J) == 3

    def test_pure_choi_identity(self):
        assert sn_lower_bound(kraus_to_choi(KrausSet((np.eye(3),)))) == 3

    def test_unitary_rejected_below_d(self):
        """rank_k_representation refuses k < d for a unitary without searching."""
        with pytest.raises(PreconditionError, match="Schmidt number >= 3"):
            rank_k_representation(unitary_channel(3, seed=4).kraus, 2, SearchConfig(restarts=1, max_iters=1))

    def test_bound_never_exceeds_upper(self):
        for p in (0.0, 0.3, 0.7, 1.0):
            K = depolarizing(3, p).kraus
            assert sn_lower_bound(kraus_to_choi(K)) <= kraus_max_rank(K)


class TestRankKRepresentation:
    def test_returns_input_when_already_low(self):
        K = KrausSet((np.eye(2),))
        assert rank_k_representation(K, 2) is K

    def test_lower_bound_blocks(self):
        """A unitary on d=3 has Schmidt number 3; asking for 2 is a precondition error."""
        with pytest.raises(PreconditionError):
            rank_k_representation(unitary_channel(3, seed=2).kraus, 2)

    def test_depolarizing_to_rank_one(self):
        K = depolarizing(2, 1.0).kraus
        rep = rank_k_representation(K, 1)
        assert kraus_max_rank(rep) == 1
        assert_allclose(kraus_to_choi(rep).matrix, kraus_to_choi(K).matrix, atol=1e-8)
