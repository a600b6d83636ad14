"""
Tests for the entanglement-assisted one-way LOCC protocol.

Run with: pytest test/test_protocol.py
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from pebkit.channels import DensityMatrix, KrausSet, apply_kraus, kraus_to_choi, random_density
from pebkit.errors import InputError, PreconditionError
from pebkit.model.config import ProtocolConfig
from pebkit.numerics import dagger, numerical_rank
from pebkit.protocol import (
    ClassicalMessage,
    alice_stage,
    alice_stage_dilated,
    bell_basis,
    bell_contractions,
    bob_stage,
    correction,
    make_resource,
    protocol_choi,
    protocol_kraus,
    range_isometry,
    simulate_locc_exact,
    simulate_locc_sampled,
    verify_theorem,
    weyl,
)
from pebkit.schmidt import maximally_entangled_fraction, rank_k_representation, schmidt_rank
from pebkit.zoo import amplitude_damping_qubit, depolarizing, measure_prepare, random_rank_k_channel

IDENTITY2 = KrausSet((np.eye(2),))


def complete_dephasing() -> KrausSet:
    return KrausSet((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))


# =============================================================================
# Teleportation primitives
# =============================================================================

class TestResource:
    def test_product_for_k1(self):
        r = make_resource(1)
        assert_allclose(r.vector, [1])
        assert schmidt_rank(r.vector, 1, 1) == 1

    def test_bell_for_k2(self):
        assert_allclose(make_resource(2).vector, np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_rank_three(self):
        assert schmidt_rank(make_resource(3).vector, 3, 3) == 3


class TestWeyl:
    def test_identity(self):
        assert_allclose(weyl(3, 0, 0), np.eye(3))

    def test_qubit_x(self):
        assert_allclose(weyl(2, 1, 0), [[0, 1], [1, 0]])

    def test_commutation(self):
        """ZX = ωXZ for k = 3, and every Weyl operator is unitary."""
        X, Z = weyl(3, 1, 0), weyl(3, 0, 1)
        omega = np.exp(2j * np.pi / 3)
        assert_allclose(Z @ X, omega * X @ Z, atol=1e-12)
        W = weyl(3, 1, 1)
        assert_allclose(dagger(W) @ W, np.eye(3), atol=1e-12)

    def test_out_of_range(self):
        with pytest.raises(InputError):
            weyl(2, 2, 0)


class TestBellBasis:
    def test_k1(self):
        basis = bell_basis(1)
        assert len(basis) == 1
        assert_allclose(basis[0], [1])

    def test_k2_bell_states(self):
        basis = bell_basis(2)
        expected = np.array([[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, -1, 1, 0]]) / np.sqrt(2)
        for b, e in zip(basis, expected):
            assert abs(abs(np.vdot(e, b)) - 1) < 1e-12

    def test_k3_orthonormal(self):
        B = np.stack(bell_basis(3), axis=1)
        assert_allclose(dagger(B) @ B, np.eye(9), atol=1e-10)

    def test_correction_inverts_contraction(self):
        """C_mn T_mn = I/k for every outcome."""
        k = 3
        for (m, n), T in bell_contractions(make_resource(k)).items():
            assert_allclose(correction(k, m, n) @ T, np.eye(k) / k, atol=1e-12)


class TestRangeIsometry:
    def test_rank_one_padded(self):
        K = np.zeros((3, 3))
        K[0, 1] = 1
        W = range_isometry(K, 2).W
        assert_allclose(W[:, 0], [1, 0, 0], atol=1e-12)
        assert_allclose(dagger(W) @ W, np.eye(2), atol=1e-12)

    def test_identity_unitary(self):
        W = range_isometry(np.eye(2), 2).W
        assert_allclose(dagger(W) @ W, np.eye(2), atol=1e-12)
        assert_allclose(W @ dagger(W), np.eye(2), atol=1e-12)

    def test_random_rank_two(self):
        rng = np.random.default_rng(4)
        K = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 4))
        W = range_isometry(K, 2).W
        assert np.max(np.abs((np.eye(4) - W @ dagger(W)) @ K)) < 1e-9

    def test_rank_above_k(self):
        with pytest.raises(PreconditionError):
            range_isometry(np.eye(3), 2)


# =============================================================================
# Stages
# =============================================================================

class TestAliceStage:
    def test_identity(self):
        rho = random_density(2, seed=1)
        branches = alice_stage(rho, IDENTITY2, 2)
        assert len(branches) == 1
        assert branches[0].probability == pytest.approx(1)
        W = branches[0].isometry.W
        assert_allclose(W @ branches[0].compressed_state.matrix @ dagger(W), rho.matrix, atol=1e-12)

    def test_complete_dephasing_plus(self):
        plus = DensityMatrix.pure(np.array([1, 1]) / np.sqrt(2))
        branches = alice_stage(plus, complete_dephasing(), 1)
        assert [b.alpha for b in branches] == [0, 1]
        for b in branches:
            assert b.probability == pytest.approx(0.5)
            assert_allclose(b.compressed_state.matrix, [[1]], atol=1e-12)

    def test_amplitude_damping_probabilities(self):
        rho = DensityMatrix.pure([0, 1])
        branches = alice_stage(rho, amplitude_damping_qubit(0.3).kraus, 2)
        assert [b.probability for b in branches] == pytest.approx([0.7, 0.3])

    def test_dilated_matches_collapsed(self):
        """The Stinespring route yields the same branches as the collapsed one."""
        K = random_rank_k_channel(3, 2, 3, seed=4).kraus
        rho = random_density(3, seed=8)
        for a, b in zip(alice_stage(rho, K, 2), alice_stage_dilated(rho, K, 2)):
            assert a.alpha == b.alpha
            assert a.probability == pytest.approx(b.probability, abs=1e-12)
            assert_allclose(a.compressed_state.matrix, b.compressed_state.matrix, atol=1e-10)


class TestBobStage:
    def test_embeds_corrected_state(self):
        k = 2
        iso = range_isometry(np.eye(2), k)
        conditional = DensityMatrix.pure([1, 0])
        out = bob_stage(conditional, ClassicalMessage(alpha=0, m=1, n=0), {0: iso})
        W = iso.W
        assert_allclose(out.matrix, W @ np.diag([0, 1]) @ dagger(W), atol=1e-12)

    def test_one_way_messages(self):
        with pytest.raises(InputError):
            ClassicalMessage(alpha=0, m=0, n=0, sender="bob", receiver="alice")


# =============================================================================
# Simulation
# =============================================================================

class TestSimulateExact:
    def test_identity_is_teleportation(self):
        rho = random_density(2, seed=3)
        out, transcript = simulate_locc_exact(IDENTITY2, 2, rho)
        assert_allclose(out.matrix, rho.matrix, atol=1e-12)
        assert transcript.one_way
        assert transcript.total_probability == pytest.approx(1, abs=1e-9)

    def test_depolarizing_with_product_resource(self):
        """The d=2 depolarizer needs no entanglement: k=1, resource |00⟩."""
        K = KrausSet(tuple(
            np.outer(np.eye(2)[i], np.eye(2)[j]) / np.sqrt(2) for i in range(2) for j in range(2)
        ))
        rho = random_density(2, seed=5)
        out, transcript = simulate_locc_exact(K, 1, rho)
        assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-12)
        assert transcript.k == 1

    def test_scrambled_rank_two(self):
        """Scrambled rank-2 channel on d=3: rank-2 representation, 10 inputs."""
        spec = random_rank_k_channel(3, 2, 3, seed=21, scramble=True)
        K = rank_k_representation(spec.kraus, 2)
        for seed in range(10):
            rho = random_density(3, seed=seed)
            out, _ = simulate_locc_exact(K, 2, rho)
            assert_allclose(out.matrix, apply_kraus(spec.kraus, rho).matrix, atol=1e-9)

    def test_rank_precondition(self):
        with pytest.raises(PreconditionError):
            simulate_locc_exact(KrausSet((np.eye(3),)), 2, DensityMatrix.maximally_mixed(3))

    def test_every_branch_teleports(self):
        """Each (α, m, n) branch of a unitary channel returns UρU†."""
        U = weyl(3, 1, 2)
        rho = random_density(3, seed=6)
        _, transcript = simulate_locc_exact(KrausSet((U,)), 3, rho)
        for o in transcript.outcomes:
            assert_allclose(o.bob_output.matrix, U @ rho.matrix @ dagger(U), atol=1e-10)

    def test_teleportation_outcomes_uniform(self):
        """Every Bell outcome of branch α has probability p_α / k²."""
        spec = random_rank_k_channel(3, 2, 3, seed=21, scramble=True)
        K = rank_k_representation(spec.kraus, 2)
        rho = random_density(3, seed=8)
        _, transcript = simulate_locc_exact(K, 2, rho)
        p = {a: np.trace(A @ rho.matrix @ dagger(A)).real for a, A in enumerate(K.operators)}
        for o in transcript.outcomes:
            assert o.probability == pytest.approx(p[o.message.alpha] / 4, abs=1e-10)
        assert transcript.total_probability == pytest.approx(1, abs=1e-9)

    def test_broken_closure_rejected(self):
        """A set with Σ K†K ≠ I cannot yield a transcript whose probabilities exceed 1."""
        with pytest.raises(InputError, match="closure"):
            simulate_locc_exact(KrausSet((1.01 * np.eye(2),)), 2, random_density(2, seed=1))
        with pytest.raises(InputError, match="closure"):
            simulate_locc_sampled(KrausSet((1.01 * np.eye(2),)), 2, random_density(2, seed=1), seed=0, shots=10)

    def test_parallel_branches(self):
        K = depolarizing(2, 0.4).kraus
        rho = random_density(2, seed=2)
        a, _ = simulate_locc_exact(K, 2, rho)
        b, _ = simulate_locc_exact(K, 2, rho, ProtocolConfig(workers=4))
        assert_allclose(a.matrix, b.matrix, atol=1e-14)


class TestSimulateSampled:
    def test_identity_zero_variance(self):
        rho = random_density(2, seed=1)
        out, transcript = simulate_locc_sampled(IDENTITY2, 2, rho, seed=3, shots=500)
        assert_allclose(out.matrix, rho.matrix, atol=1e-12)
        assert sum(o.count for o in transcript.outcomes) == 500

    def test_depolarizing_within_error_bars(self):
        rho = random_density(2, seed=7)
        out, transcript = simulate_locc_sampled(depolarizing(2, 1.0).kraus, 2, rho, seed=11, shots=10_000)
        deviation = np.abs(out.matrix - np.eye(2) / 2)
        assert np.all(deviation <= 5 * transcript.standard_error + 1e-12)

    def test_deterministic(self):
        K = depolarizing(2, 0.5).kraus
        rho = random_density(2, seed=2)
        _, a = simulate_locc_sampled(K, 2, rho, seed=5, shots=2000)
        _, b = simulate_locc_sampled(K, 2, rho, seed=5, shots=2000)
        assert [(o.message, o.count) for o in a.outcomes] == [(o.message, o.count) for o in b.outcomes]

    def test_shots_positive(self):
        with pytest.raises(InputError):
            simulate_locc_sampled(IDENTITY2, 2, DensityMatrix.maximally_mixed(2), seed=0, shots=0)


# =============================================================================
# Whole-protocol channel
# =============================================================================

class TestProtocolChoi:
    def test_identity(self):
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        assert_allclose(protocol_choi(IDENTITY2, 2).matrix, np.outer(phi, phi), atol=1e-10)

    def test_entanglement_breaking_witness(self):
        spec = measure_prepare(3, seed=4)
        J = protocol_choi(spec.kraus, 1)
        assert maximally_entangled_fraction(J) <= 1 / 3 + 1e-9

    def test_random_rank_two(self):
        K = random_rank_k_channel(3, 2, 3, seed=6).kraus
        diff = protocol_choi(K, 2).matrix - kraus_to_choi(K).matrix
        assert 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))) < 1e-8

    def test_composite_ranks(self):
        K = random_rank_k_channel(4, 2, 3, seed=1).kraus
        assert all(numerical_rank(M) <= 2 for M in protocol_kraus(K, 2).operators)


class TestVerifyTheorem:
    def test_identity(self):
        assert verify_theorem(IDENTITY2, 2).passed

    def test_amplitude_damping(self):
        report = verify_theorem(amplitude_damping_qubit(0.5).kraus, 2)
        assert report.passed
        assert report.resource_schmidt_rank == 2
        assert report.lower_bound <= 2

    def test_unitary_rejected(self):
        with pytest.raises(PreconditionError):
            verify_theorem(KrausSet((weyl(3, 1, 0),)), 2)
