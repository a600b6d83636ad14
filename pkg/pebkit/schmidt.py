# pebkit/schmidt.py
"""
Schmidt rank and Schmidt number machinery.

Upper bounds on the Schmidt number of a channel come from Kraus
representations whose operators all have rank ≤ k (found, if necessary, by a
search over unitary mixings of the canonical Kraus set). Lower bounds come
only from the Choi state: its exact Schmidt rank when it is pure, otherwise
the maximally entangled fraction and the partial transpose. A failed search
never lowers anything.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from pebkit.channels import (
    ChoiMatrix,
    KrausSet,
    choi_to_kraus,
    kraus_to_choi,
)
from pebkit.errors import InputError, PreconditionError
from pebkit.model.config import SearchConfig
from pebkit.numerics import (
    ComplexMatrix,
    DEFAULT_RANK_TOL,
    as_vector,
    dagger,
    eigh,
    haar_random_unitary,
    max_abs,
    numerical_rank,
    partial_transpose,
    psd_power,
    svd,
)

logger = logging.getLogger(__name__)

FEASIBLE_RTOL = 1e-12   # relative objective that counts as rank ≤ k
POLISH_RTOL = 1e-24     # keep descending until here before truncating
CERTIFICATE_ATOL = 1e-8
WITNESS_TOL = 1e-9


# =============================================================================
# Pure states
# =============================================================================

@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left_basis: ComplexMatrix
    right_basis: ComplexMatrix
    rank: int

    def reconstruct(self) -> np.ndarray:
        return sum(
            c * np.kron(self.left_basis[:, i], self.right_basis[:, i])
            for i, c in enumerate(self.coefficients)
        )


def schmidt_decompose(v, dA: int, dB: int, tol: float = DEFAULT_RANK_TOL) -> SchmidtDecomposition:
    """Schmidt decomposition of a normalized vector on A⊗B (A index major).

    The largest-magnitude entry of every left vector is made real positive;
    the matching right vector absorbs the conjugate phase.
    """
    v = as_vector(v, "bipartite vector")
    if v.size != dA * dB:
        raise InputError(f"vector has length {v.size}, expected {dA}*{dB} = {dA * dB}")
    norm = np.linalg.norm(v)
    if abs(norm - 1) > 1e-10:
        raise InputError(f"vector is not normalized (norm {norm!r})")
    U, S, Vdag = svd(v.reshape(dA, dB))
    rank = int(np.count_nonzero(S > tol * S[0]))
    left = U[:, :rank].copy()
    right = Vdag[:rank, :].T.copy()
    for i in range(rank):
        pivot = left[np.argmax(np.abs(left[:, i])), i]
        phase = np.conj(pivot) / abs(pivot)
        left[:, i] *= phase
        right[:, i] *= np.conj(phase)
    return SchmidtDecomposition(coefficients=S[:rank].copy(), left_basis=left, right_basis=right, rank=rank)


def schmidt_rank(v, dA: int, dB: int, tol: float = DEFAULT_RANK_TOL) -> int:
    return schmidt_decompose(v, dA, dB, tol).rank


# =============================================================================
# Kraus-rank certificates
# =============================================================================

def kraus_max_rank(K: KrausSet, tol: float = DEFAULT_RANK_TOL) -> int:
    """Largest numerical rank in the set: the channel is certified in O_k for this k."""
    return max(numerical_rank(A, tol) for A in K.operators)


@dataclass(frozen=True)
class RankCertificate:
    target_k: int
    achieved: bool
    witness_kraus: KrausSet | None
    max_rank_found: int
    mixing_unitary: ComplexMatrix
    residual: float
    restart: int = 0
    iterations: int = 0


@dataclass
class _RestartResult:
    index: int
    objective: float
    U: ComplexMatrix
    iterations: int
    witness: KrausSet | None = None
    verified: bool = False


def _tail(stacked: np.ndarray, k: int) -> tuple[float, np.ndarray]:
    """Σ_β Σ_{i>k} σ_i(K'_β)² and the tail parts T_β."""
    U, S, Vh = np.linalg.svd(stacked, full_matrices=False)
    tail = (U[..., k:] * S[:, None, k:]) @ Vh[:, k:, :]
    return float(np.sum(S[:, k:] ** 2)), tail


def _truncate(A: np.ndarray, k: int) -> np.ndarray:
    U, S, Vh = np.linalg.svd(A, full_matrices=False)
    return (U[:, :k] * S[:k]) @ Vh[:k, :]


def _witness_from(mixed: np.ndarray, k: int, reference: ChoiMatrix, tol: float) -> tuple[KrausSet, bool]:
    """Truncate every operator to rank k, restore closure, and re-verify."""
    ops = [_truncate(A, k) for A in mixed]
    ops = [A for A in ops if np.linalg.norm(A) > 1e-14] or ops[:1]
    total = sum(dagger(A) @ A for A in ops)
    try:
        correction = psd_power(total, -0.5)
    except InputError:
        return KrausSet(tuple(ops)), False
    # right multiplication cannot raise rank
    witness = KrausSet(tuple(A @ correction for A in ops))
    ranks_ok = kraus_max_rank(witness, tol) <= k
    choi_ok = max_abs(kraus_to_choi(witness).matrix - reference.matrix) <= CERTIFICATE_ATOL
    return witness, ranks_ok and choi_ok


def _descend(
    canonical: np.ndarray, k: int, U: ComplexMatrix, config: SearchConfig, total: float
) -> tuple[ComplexMatrix, float, int]:
    """Geodesic steepest descent of the tail objective on the unitary group."""
    flat = canonical.reshape(canonical.shape[0], -1)
    eta = config.step
    f, tail = _tail(np.tensordot(U, canonical, axes=(1, 0)), k)
    checkpoint = f
    it = 0
    for it in range(1, config.max_iters + 1):
        if f < POLISH_RTOL * total:
            break
        G = 2 * tail.reshape(tail.shape[0], -1) @ flat.conj().T / total
        B = G @ dagger(U)
        omega = (B - dagger(B)) / 2
        if np.linalg.norm(omega) < 1e-15:
            break
        while eta > 1e-14:
            U_try = scipy.linalg.expm(-eta * omega) @ U
            f_try, tail_try = _tail(np.tensordot(U_try, canonical, axes=(1, 0)), k)
            if f_try < f:
                U, f, tail = U_try, f_try, tail_try
                eta = min(eta * 1.5, 1e6)
                break
            eta *= 0.5
        else:
            break
        if it % 200 == 0:
            # plateau far from feasibility: this restart is stuck
            if f > FEASIBLE_RTOL * total and f > 0.999 * checkpoint:
                break
            checkpoint = f
    return U, f, it


def minimize_kraus_rank(K: KrausSet, target_k: int, config: SearchConfig | None = None) -> RankCertificate:
    """Search unitary mixings of the canonical Kraus set for operators of rank ≤ target_k.

    A certificate with ``achieved=False`` is inconclusive: it does not prove
    the Schmidt number exceeds ``target_k``.
    """
    config = config or SearchConfig()
    d = K.d
    if not 1 <= target_k <= d:
        raise PreconditionError(f"target_k must lie in [1, {d}], got {target_k}")

    reference = kraus_to_choi(K)
    canonical_set = choi_to_kraus(reference, tol=config.tol)
    canonical = np.stack(canonical_set.operators)
    if config.pad_operators > 0:
        canonical = np.concatenate([canonical, np.zeros((config.pad_operators, d, d), dtype=np.complex128)])
    m = canonical.shape[0]
    total = float(np.sum(np.abs(canonical) ** 2))
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    logger.info(f"Kraus-rank search: d={d}, m={m}, target_k={target_k}, restarts={config.restarts}")

    def run_restart(index: int) -> _RestartResult:
        U0 = np.eye(m, dtype=np.complex128) if index == 0 else haar_random_unitary(m, seeds[index])
        U, f, iters = _descend(canonical, target_k, np.array(U0), config, total)
        result = _RestartResult(index=index, objective=f, U=U, iterations=iters)
        if f < FEASIBLE_RTOL * total:
            mixed = np.tensordot(U, canonical, axes=(1, 0))
            result.witness, result.verified = _witness_from(mixed, target_k, reference, config.tol)
        logger.debug(f"restart {index}: objective {f / total:.3e} after {iters} iterations")
        return result

    results: list[_RestartResult] = []
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_restart, range(config.restarts)))
    else:
        for index in range(config.restarts):
            results.append(run_restart(index))
            if results[-1].verified:
                break

    successes = [r for r in results if r.verified]
    best = successes[0] if successes else min(results, key=lambda r: (r.objective, r.index))
    mixed = np.tensordot(best.U, canonical, axes=(1, 0))
    if best.verified:
        max_rank = kraus_max_rank(best.witness, config.tol)
    else:
        max_rank = max(numerical_rank(A, config.tol) for A in mixed)
        logger.warning(f"no rank-{target_k} representation found (best objective {best.objective / total:.3e})")
    return RankCertificate(
        target_k=target_k,
        achieved=best.verified,
        witness_kraus=best.witness if best.verified else None,
        max_rank_found=max_rank,
        mixing_unitary=best.U,
        residual=best.objective,
        restart=best.index,
        iterations=best.iterations,
    )


# =============================================================================
# Lower bounds (witnesses on the Choi state)
# =============================================================================

def maximally_entangled_fraction(J: ChoiMatrix) -> float:
    d = J.d
    phi = np.eye(d, dtype=np.complex128).reshape(-1) / np.sqrt(d)
    return float(np.real(np.vdot(phi, J.matrix @ phi)))


def sn_lower_bound_fidelity(J: ChoiMatrix, tol: float = WITNESS_TOL) -> int:
    """Smallest k with F ≤ k/d; any state with Schmidt number ≤ k obeys ⟨Φ|σ|Φ⟩ ≤ k/d."""
    F = maximally_entangled_fraction(J)
    return int(min(max(math.ceil(F * J.d - tol), 1), J.d))


def sn_lower_bound_ppt(J: ChoiMatrix, tol: float = WITNESS_TOL) -> int:
    """2 when the Choi state has a negative partial transpose, else 1."""
    d = J.d
    if d < 2:
        return 1
    pt = partial_transpose(J.matrix, (d, d), sys=1)
    smallest = float(np.linalg.eigvalsh((pt + dagger(pt)) / 2)[0])
    return 2 if smallest < -tol else 1


def sn_lower_bound(J: ChoiMatrix, tol: float = WITNESS_TOL) -> int:
    """Best rigorous lower bound on SN(J).

    A pure Choi state (a single Kraus operator) is decided exactly by its
    Schmidt rank; otherwise the fidelity and PPT witnesses are combined.
    """
    if numerical_rank(J.matrix) == 1:
        top = eigh(J.matrix)[1][:, 0]
        return schmidt_rank(top, J.d, J.d)
    return max(sn_lower_bound_fidelity(J, tol), sn_lower_bound_ppt(J, tol))


# =============================================================================
# Schmidt number bracketing
# =============================================================================

@dataclass(frozen=True)
class SchmidtBounds:
    lower: int
    upper: int
    canonical_max_rank: int
    certificate: RankCertificate | None = None
    attempts: tuple[RankCertificate, ...] = ()


def sn_bounds(K: KrausSet, config: SearchConfig | None = None) -> SchmidtBounds:
    """Rigorous lower bound and search-based upper bound on SN(E).

    Every k from just below the best known representation down to the
    rigorous lower bound is searched; an inconclusive k does not stop the
    scan, and the upper bound is the smallest k that was achieved.
    """
    config = config or SearchConfig()
    J = kraus_to_choi(K)
    lower = sn_lower_bound(J)
    canonical_rank = kraus_max_rank(choi_to_kraus(J, config.tol), config.tol)
    upper = min(canonical_rank, kraus_max_rank(K, config.tol))
    certificate = None
    attempts = []
    for k in range(upper - 1, lower - 1, -1):
        attempt = minimize_kraus_rank(K, k, config)
        attempts.append(attempt)
        if attempt.achieved:
            upper, certificate = k, attempt
        else:
            logger.info(f"rank-{k} search inconclusive, continuing below")
    logger.info(f"Schmidt number bracket: {lower} <= SN <= {upper}")
    return SchmidtBounds(lower=lower, upper=upper, canonical_max_rank=canonical_rank,
                         certificate=certificate, attempts=tuple(attempts))


def sn_upper_search(K: KrausSet, config: SearchConfig | None = None) -> int:
    return sn_bounds(K, config).upper


def rank_k_representation(K: KrausSet, k: int, config: SearchConfig | None = None) -> KrausSet:
    """A Kraus representation of the same channel with every operator of rank ≤ k."""
    config = config or SearchConfig()
    current = kraus_max_rank(K, config.tol)
    if current <= k:
        return K
    J = kraus_to_choi(K)
    lower = sn_lower_bound(J)
    if lower > k:
        raise PreconditionError(
            f"channel has Schmidt number >= {lower}; it is not in O_{k}", rank=current
        )
    canonical = choi_to_kraus(J, config.tol)
    if kraus_max_rank(canonical, config.tol) <= k:
        return canonical
    certificate = minimize_kraus_rank(K, k, config)
    if not certificate.achieved:
        raise PreconditionError(
            f"no Kraus representation with rank <= {k} found (best max rank {certificate.max_rank_found})",
            rank=certificate.max_rank_found,
        )
    return certificate.witness_kraus
