# pebkit/numerics.py
"""
Dense complex linear algebra used by every other pebkit module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Functions here
never mutate their arguments; results returned by :func:`as_matrix` are
read-only so they can be shared between threads.

Bipartite helpers use one index convention throughout the package: a vector
on A⊗B is flattened with the A index major, i.e. ``|i⟩_A⊗|j⟩_B`` sits at
position ``i * dB + j``.
"""

import logging

import numpy as np
import numpy.typing as npt
import scipy.linalg

from pebkit.errors import InputError

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]

DEFAULT_RANK_TOL = 1e-10
HERMITIAN_TOL = 1e-10


def as_matrix(data, name: str = "matrix") -> ComplexMatrix:
    """Return a read-only complex128 2-D copy of ``data``, rejecting NaN/Inf."""
    arr = np.array(data, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.size == 0:
        raise InputError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def as_vector(data, name: str = "vector") -> npt.NDArray[np.complex128]:
    arr = np.array(data, dtype=np.complex128).reshape(-1)
    if arr.size == 0:
        raise InputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def dagger(M: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.asarray(M)).T


def hermiticity_residual(H: ComplexMatrix) -> float:
    H = np.asarray(H)
    if H.shape[0] != H.shape[1]:
        return float("inf")
    return float(np.max(np.abs(H - dagger(H)))) if H.size else 0.0


def svd(M: ComplexMatrix) -> tuple[ComplexMatrix, npt.NDArray[np.float64], ComplexMatrix]:
    """Thin SVD with singular values in descending order.

    Falls back to the slower ``gesvd`` driver when ``gesdd`` fails to converge.
    """
    M = as_matrix(M, "svd input")
    try:
        U, S, Vdag = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.debug("gesdd did not converge, retrying with gesvd")
        U, S, Vdag = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
    return U, S, Vdag


def eigh(H: ComplexMatrix, tol: float = HERMITIAN_TOL) -> tuple[npt.NDArray[np.float64], ComplexMatrix]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Hermiticity is checked entrywise against ``tol``; the matrix is then
    symmetrized before calling LAPACK.
    """
    H = as_matrix(H, "eigh input")
    if H.shape[0] != H.shape[1]:
        raise InputError(f"eigh needs a square matrix, got shape {H.shape}")
    residual = hermiticity_residual(H)
    if residual > tol:
        raise InputError(f"matrix is not Hermitian: max |H - H†| = {residual:.3e} > {tol:.1e}")
    w, v = scipy.linalg.eigh((H + dagger(H)) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def numerical_rank(M: ComplexMatrix, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values strictly above ``tol`` times the largest one."""
    if not 0 < tol < 1:
        raise InputError(f"rank tolerance must lie in (0, 1), got {tol}")
    S = svd(M)[1]
    if S.size == 0 or S[0] == 0:
        return 0
    return int(np.count_nonzero(S > tol * S[0]))


def haar_random_unitary(n: int, seed: int | np.random.SeedSequence | None) -> ComplexMatrix:
    """Haar-distributed n×n unitary: QR of a complex Ginibre matrix with phase-fixed R diagonal."""
    if n < 1:
        raise InputError(f"unitary dimension must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = scipy.linalg.qr(Z)
    diag = np.diag(R)
    phases = diag / np.abs(diag)
    return as_matrix(Q * phases, "haar unitary")


def complex_gaussian(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def psd_power(H: ComplexMatrix, power: float, tol: float = DEFAULT_RANK_TOL) -> ComplexMatrix:
    """H**power for a PSD matrix; eigenvalues at or below tol·λmax are treated as zero.

    Negative powers of a singular matrix raise InputError.
    """
    w, v = eigh(H, tol=max(HERMITIAN_TOL, tol))
    cutoff = tol * max(w[0], 0.0)
    support = w > cutoff
    if power < 0 and not np.all(support):
        raise InputError(f"cannot raise a singular matrix to power {power}")
    wp = np.zeros_like(w)
    wp[support] = w[support] ** power
    return (v * wp) @ dagger(v)


def complete_orthonormal(W: ComplexMatrix, n: int) -> ComplexMatrix:
    """Extend the orthonormal columns of W (d×r) to n orthonormal columns.

    New columns come from Gram-Schmidt against |0⟩, |1⟩, ... in index order,
    so the completion is deterministic.
    """
    W = np.array(W, dtype=np.complex128)
    d, r = W.shape
    if n > d:
        raise InputError(f"cannot fit {n} orthonormal columns in dimension {d}")
    cols = [W[:, j] for j in range(r)]
    for i in range(d):
        if len(cols) >= n:
            break
        e = np.zeros(d, dtype=np.complex128)
        e[i] = 1.0
        # two passes keep the completion orthogonal to working precision
        for _ in range(2):
            for c in cols:
                e = e - np.vdot(c, e) * c
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            cols.append(e / norm)
    return np.stack(cols[:n], axis=1)


def partial_trace(M: ComplexMatrix, dims: tuple[int, int], keep: int) -> ComplexMatrix:
    """Trace out one factor of a bipartite operator; ``keep`` is 0 (A) or 1 (B)."""
    dA, dB = dims
    T = np.asarray(M).reshape(dA, dB, dA, dB)
    if keep == 0:
        return np.einsum("ijkj->ik", T)
    if keep == 1:
        return np.einsum("ijil->jl", T)
    raise InputError(f"keep must be 0 or 1, got {keep}")


def partial_transpose(M: ComplexMatrix, dims: tuple[int, int], sys: int = 1) -> ComplexMatrix:
    dA, dB = dims
    T = np.asarray(M).reshape(dA, dB, dA, dB)
    if sys == 0:
        T = T.transpose(2, 1, 0, 3)
    elif sys == 1:
        T = T.transpose(0, 3, 2, 1)
    else:
        raise InputError(f"sys must be 0 or 1, got {sys}")
    return T.reshape(dA * dB, dA * dB)


def max_abs(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0
