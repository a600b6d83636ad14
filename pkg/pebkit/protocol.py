# pebkit/protocol.py
"""
Entanglement-assisted one-way LOCC simulation of channels in O_k.

Alice holds the input ρ. She measures which Kraus operator K_α acted, which
also tells her the k-dimensional subspace range(W_α) holding the conditional
state. She compresses that state into k dimensions and teleports it through
the shared resource |Φ_k⟩ with a Bell measurement; the classical message
(α, m, n) goes to Bob, who applies the Weyl correction and embeds the result
back into d dimensions with W_α.

Alice's stage is simulated in its collapsed form (sample α with
p_α = tr K_α ρ K_α†); :func:`alice_stage_dilated` runs the same stage through
the Stinespring unitary and is kept as a cross-check.
"""

import logging
import math
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from pebkit.channels import (
    ChoiMatrix,
    STATE_TOL,
    DensityMatrix,
    KrausSet,
    apply_kraus,
    channel_distance,
    kraus_to_choi,
    kraus_to_stinespring,
    output_tol,
    stinespring_unitary,
)
from pebkit.errors import InputError, PreconditionError, VerificationError
from pebkit.model.config import ProtocolConfig
from pebkit.numerics import (
    ComplexMatrix,
    DEFAULT_RANK_TOL,
    as_matrix,
    complete_orthonormal,
    dagger,
    max_abs,
    numerical_rank,
    svd,
)
from pebkit.schmidt import kraus_max_rank, schmidt_rank, sn_lower_bound

logger = logging.getLogger(__name__)

OUTPUT_TOL = 1e-9


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class ResourceState:
    """|Φ_k⟩ = k^{-1/2} Σ_{i<k} |ii⟩ shared by Alice (first factor) and Bob."""
    k: int
    vector: np.ndarray


@dataclass(frozen=True)
class ClassicalMessage:
    alpha: int
    m: int
    n: int
    sender: str = "alice"
    receiver: str = "bob"

    def __post_init__(self):
        if (self.sender, self.receiver) != ("alice", "bob"):
            raise InputError(f"messages flow from alice to bob only, got {self.sender} -> {self.receiver}")


@dataclass(frozen=True)
class RangeIsometry:
    alpha: int
    W: ComplexMatrix

    def __post_init__(self):
        W = as_matrix(self.W, "range isometry")
        residual = max_abs(dagger(W) @ W - np.eye(W.shape[1]))
        if residual > 1e-10:
            raise InputError(f"W†W deviates from identity by {residual:.3e}")
        object.__setattr__(self, "W", W)


@dataclass(frozen=True)
class AliceBranch:
    alpha: int
    probability: float
    compressed_state: DensityMatrix
    isometry: RangeIsometry


@dataclass(frozen=True)
class ProtocolOutcome:
    message: ClassicalMessage
    probability: float
    bob_output: DensityMatrix
    count: int | None = None


@dataclass
class ProtocolTranscript:
    """Ordered record of Alice's outcomes and the messages Bob consumed."""
    mode: str  # "exact" or "sampled"
    k: int
    outcomes: list[ProtocolOutcome] = field(default_factory=list)
    dropped_mass: float = 0.0
    shots: int | None = None
    seed: int | None = None
    standard_error: np.ndarray | None = None

    @property
    def one_way(self) -> bool:
        return all(o.message.sender == "alice" and o.message.receiver == "bob" for o in self.outcomes)

    @property
    def total_probability(self) -> float:
        return float(sum(o.probability for o in self.outcomes))


@dataclass(frozen=True)
class TheoremReport:
    k: int
    choi_distance: float
    resource_schmidt_rank: int
    composite_max_rank: int
    one_way: bool
    lower_bound: int
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.choi_distance < self.tol
            and self.resource_schmidt_rank == self.k
            and self.composite_max_rank <= self.k
            and self.one_way
        )


# =============================================================================
# Teleportation primitives
# =============================================================================

def make_resource(k: int) -> ResourceState:
    if k < 1:
        raise InputError(f"resource dimension must be >= 1, got {k}")
    vector = np.eye(k, dtype=np.complex128).reshape(-1) / np.sqrt(k)
    vector.setflags(write=False)
    return ResourceState(k=k, vector=vector)


def weyl(k: int, m: int, n: int) -> ComplexMatrix:
    """X^m Z^n with X|j⟩ = |j+1 mod k⟩ and Z|j⟩ = ω^j|j⟩, ω = exp(2πi/k)."""
    if not (0 <= m < k and 0 <= n < k):
        raise InputError(f"Weyl indices must lie in [0, {k}), got ({m}, {n})")
    X = np.roll(np.eye(k, dtype=np.complex128), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(k) / k))
    return np.linalg.matrix_power(X, m) @ np.linalg.matrix_power(Z, n)


def bell_basis(k: int) -> list[np.ndarray]:
    """|Φ_mn⟩ = (X^m Z^n ⊗ I)|Φ_k⟩, ordered with m major."""
    phi = make_resource(k).vector
    eye = np.eye(k)
    return [np.kron(weyl(k, m, n), eye) @ phi for m in range(k) for n in range(k)]


def correction(k: int, m: int, n: int) -> ComplexMatrix:
    """Bob's unitary for outcome (m, n); inverts the Bell contraction up to scale."""
    return weyl(k, m, n)


def bell_contractions(resource: ResourceState) -> dict[tuple[int, int], ComplexMatrix]:
    """Maps (m, n) to T_mn with ⟨Φ_mn|_{CA} (|ψ⟩_C ⊗ |Φ_k⟩_{AB}) = T_mn |ψ⟩ on Bob's side."""
    k = resource.k
    shared = resource.vector.reshape(k, k)
    contractions = {}
    for index, b in enumerate(bell_basis(k)):
        m, n = divmod(index, k)
        contractions[(m, n)] = (np.conj(b.reshape(k, k)) @ shared).T
    return contractions


# =============================================================================
# Alice
# =============================================================================

def range_isometry(K_alpha, k: int, tol: float = DEFAULT_RANK_TOL, alpha: int = 0) -> RangeIsometry:
    """d×k isometry whose range contains range(K_alpha).

    Left singular vectors span the range; when the rank is below k the
    remaining columns come from Gram-Schmidt against the standard basis.
    """
    K_alpha = as_matrix(K_alpha, f"Kraus operator {alpha}")
    d = K_alpha.shape[0]
    if k > d:
        raise PreconditionError(f"k={k} exceeds the output dimension {d}")
    rank = numerical_rank(K_alpha, tol)
    if rank > k:
        raise PreconditionError(f"Kraus operator {alpha} has rank {rank} > k={k}", rank=rank)
    U = svd(K_alpha)[0][:, :rank].copy()
    for j in range(rank):
        pivot = U[np.argmax(np.abs(U[:, j])), j]
        U[:, j] *= np.conj(pivot) / abs(pivot)
    return RangeIsometry(alpha=alpha, W=complete_orthonormal(U, k))


def _check_rank(K: KrausSet, k: int) -> None:
    d = K.d
    if not 1 <= k <= d:
        raise PreconditionError(f"k must lie in [1, {d}], got {k}")
    rank = kraus_max_rank(K)
    if rank > k:
        raise PreconditionError(f"Kraus representation has max rank {rank} > k={k}", rank=rank)


def _compress(alpha: int, unnormalized: ComplexMatrix, p: float, iso: RangeIsometry) -> AliceBranch:
    compressed = dagger(iso.W) @ unnormalized @ iso.W / p
    compressed = (compressed + dagger(compressed)) / 2
    # rounding in K ρ K† is amplified by 1/p
    state = DensityMatrix(dim=iso.W.shape[1], matrix=compressed, tol=max(STATE_TOL, 1e-14 / p))
    return AliceBranch(
        alpha=alpha,
        probability=p,
        compressed_state=state,
        isometry=iso,
    )


def alice_stage(
    rho: DensityMatrix, K: KrausSet, k: int | None = None, drop_threshold: float = 1e-14
) -> list[AliceBranch]:
    """Kraus-outcome measurement followed by compression onto range(W_α)."""
    if rho.dim != K.d_in:
        raise InputError(f"state dimension {rho.dim} does not match channel input {K.d_in}")
    k = kraus_max_rank(K) if k is None else k
    _check_rank(K, k)
    branches = []
    for alpha, A in enumerate(K.operators):
        unnormalized = A @ rho.matrix @ dagger(A)
        p = float(np.trace(unnormalized).real)
        if p <= drop_threshold:
            continue
        branches.append(_compress(alpha, unnormalized, p, range_isometry(A, k, alpha=alpha)))
    return branches


def alice_stage_dilated(
    rho: DensityMatrix, K: KrausSet, k: int | None = None, drop_threshold: float = 1e-14
) -> list[AliceBranch]:
    """Alice's stage through the dilation: ancilla |0⟩_E, global U, then the POVM {|α⟩⟨α|}."""
    k = kraus_max_rank(K) if k is None else k
    _check_rank(K, k)
    dilation = kraus_to_stinespring(K)
    U = stinespring_unitary(dilation)
    d, m = K.d, dilation.env_dim
    ancilla = np.zeros((m, m), dtype=np.complex128)
    ancilla[0, 0] = 1.0
    joint = U @ np.kron(rho.matrix, ancilla) @ dagger(U)
    blocks = joint.reshape(d, m, d, m)
    branches = []
    for alpha in range(m):
        unnormalized = blocks[:, alpha, :, alpha]
        p = float(np.trace(unnormalized).real)
        if p <= drop_threshold:
            continue
        iso = range_isometry(dilation.block(alpha), k, alpha=alpha)
        branches.append(_compress(alpha, unnormalized, p, iso))
    return branches


# =============================================================================
# Bob
# =============================================================================

def bob_stage(
    conditional: DensityMatrix, message: ClassicalMessage, isometries: Mapping[int, RangeIsometry]
) -> DensityMatrix:
    """Correct Bob's resource half for outcome (m, n) and embed it with W_α."""
    C = correction(conditional.dim, message.m, message.n)
    W = isometries[message.alpha].W
    out = W @ C @ conditional.matrix @ dagger(C) @ dagger(W)
    return DensityMatrix(dim=W.shape[0], matrix=(out + dagger(out)) / 2)


# =============================================================================
# Full protocol
# =============================================================================

def _enumerate(
    K: KrausSet, k: int, rho: DensityMatrix, config: ProtocolConfig
) -> tuple[list[ProtocolOutcome], float, DensityMatrix]:
    _check_rank(K, k)
    direct = apply_kraus(K, rho, config.closure_tol)
    resource = make_resource(k)
    branches = alice_stage(rho, K, k, config.drop_threshold)
    isometries = {b.alpha: b.isometry for b in branches}
    contractions = bell_contractions(resource)
    kept = sum(b.probability for b in branches)
    dropped = max(0.0, float(np.trace(direct.matrix).real) - kept)
    if dropped > 0:
        logger.debug(f"dropped outcome mass {dropped:.3e}")

    def run_branch(branch: AliceBranch) -> list[ProtocolOutcome]:
        sigma = branch.compressed_state.matrix
        outcomes = []
        for (m, n), T in contractions.items():
            bob_half = T @ sigma @ dagger(T)
            q = float(np.trace(bob_half).real)
            message = ClassicalMessage(alpha=branch.alpha, m=m, n=n)
            conditional = DensityMatrix(dim=k, matrix=bob_half / q)
            outcomes.append(ProtocolOutcome(
                message=message,
                probability=branch.probability * q,
                bob_output=bob_stage(conditional, message, isometries),
            ))
        return outcomes

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_branch = list(pool.map(run_branch, branches))
    else:
        per_branch = [run_branch(b) for b in branches]
    outcomes = [o for group in per_branch for o in group]
    logger.info(f"protocol k={k}: {len(branches)} Kraus outcomes, {len(outcomes)} branches")
    return outcomes, dropped, direct


def simulate_locc_exact(
    K: KrausSet, k: int, rho: DensityMatrix, config: ProtocolConfig | None = None, tol: float = OUTPUT_TOL
) -> tuple[DensityMatrix, ProtocolTranscript]:
    """Average Bob's output over every (α, m, n) branch with its exact probability.

    Raises VerificationError when the average differs from the direct channel
    action by more than ``tol`` in any entry.
    """
    config = config or ProtocolConfig()
    outcomes, dropped, direct = _enumerate(K, k, rho, config)
    output = sum(o.probability * o.bob_output.matrix for o in outcomes)
    residual = max_abs(output - direct.matrix)
    if residual > tol:
        raise VerificationError(f"protocol output differs from E(ρ) by {residual:.3e}", max_residual=residual)
    transcript = ProtocolTranscript(mode="exact", k=k, outcomes=outcomes, dropped_mass=dropped)
    return DensityMatrix(dim=K.d_out, matrix=output, tol=output_tol(K.d_in, config.closure_tol + tol)), transcript


def simulate_locc_sampled(
    K: KrausSet, k: int, rho: DensityMatrix, seed: int, shots: int, config: ProtocolConfig | None = None
) -> tuple[DensityMatrix, ProtocolTranscript]:
    """Monte Carlo run: draw branches by their exact probabilities.

    Every block of ``config.block_size`` shots has its own random stream
    spawned from ``seed``, so results do not depend on scheduling.
    """
    if shots < 1:
        raise InputError(f"shots must be >= 1, got {shots}")
    config = config or ProtocolConfig()
    outcomes, dropped, _ = _enumerate(K, k, rho, config)
    probs = np.array([o.probability for o in outcomes])
    probs = probs / probs.sum()
    blocks = math.ceil(shots / config.block_size)
    counts = np.zeros(len(outcomes), dtype=np.int64)
    for b, child in enumerate(np.random.SeedSequence(seed).spawn(blocks)):
        size = min(config.block_size, shots - b * config.block_size)
        draws = np.random.default_rng(child).choice(len(outcomes), size=size, p=probs)
        counts += np.bincount(draws, minlength=len(outcomes))

    outputs = np.stack([o.bob_output.matrix for o in outcomes])
    weights = counts / shots
    mean = np.tensordot(weights, outputs, axes=(0, 0))
    spread = np.tensordot(weights, np.abs(outputs - mean) ** 2, axes=(0, 0))
    standard_error = np.sqrt(spread / shots)

    sampled = [
        ProtocolOutcome(message=o.message, probability=o.probability, bob_output=o.bob_output, count=int(c))
        for o, c in zip(outcomes, counts)
        if c > 0
    ]
    transcript = ProtocolTranscript(
        mode="sampled",
        k=k,
        outcomes=sampled,
        dropped_mass=dropped,
        shots=shots,
        seed=seed,
        standard_error=standard_error,
    )
    return DensityMatrix(dim=K.d_out, matrix=mean), transcript


def protocol_kraus(K: KrausSet, k: int) -> KrausSet:
    """Composite operators M_{α,m,n} = W_α C_mn T_mn W_α† K_α of the whole protocol."""
    _check_rank(K, k)
    contractions = bell_contractions(make_resource(k))
    composite = []
    for alpha, A in enumerate(K.operators):
        W = range_isometry(A, k, alpha=alpha).W
        compress = dagger(W) @ A
        for (m, n), T in contractions.items():
            composite.append(W @ correction(k, m, n) @ T @ compress)
    return KrausSet(tuple(composite))


def protocol_choi(K: KrausSet, k: int) -> ChoiMatrix:
    return kraus_to_choi(protocol_kraus(K, k))


def verify_theorem(K: KrausSet, k: int, tol: float = 1e-8) -> TheoremReport:
    """Run the construction for ``K`` with a rank-k resource and check every link of the chain.

    Rank violations raise PreconditionError before anything is simulated.
    """
    _check_rank(K, k)
    resource = make_resource(k)
    composite = protocol_kraus(K, k)
    J_protocol = kraus_to_choi(composite)
    distance = channel_distance(J_protocol, kraus_to_choi(K)).trace_distance
    outcomes, _, _ = _enumerate(K, k, DensityMatrix.maximally_mixed(K.d), ProtocolConfig())
    transcript = ProtocolTranscript(mode="exact", k=k, outcomes=outcomes)
    report = TheoremReport(
        k=k,
        choi_distance=distance,
        resource_schmidt_rank=schmidt_rank(resource.vector, k, k),
        composite_max_rank=kraus_max_rank(composite),
        one_way=transcript.one_way,
        lower_bound=sn_lower_bound(J_protocol),
        tol=tol,
    )
    logger.info(f"theorem check k={k}: distance {distance:.3e}, passed={report.passed}")
    return report
