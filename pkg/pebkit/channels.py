# pebkit/channels.py
"""
Channel representations and the exact conversions between them.

Conventions (used by every reshape in this module):

- The Choi matrix is the trace-one state J = (id ⊗ E)(|Φ_d⟩⟨Φ_d|) with
  |Φ_d⟩ = d^{-1/2} Σ_i |ii⟩. The reference system A comes first and its index
  is major: |i⟩_A ⊗ |j⟩_B sits at row i*d + j.
- (I ⊗ K)|Φ_d⟩ therefore has entry K[j, i] / √d at position i*d + j, which
  is ``K.T.reshape(-1) / √d``.
- A Stinespring isometry V = Σ_α K_α ⊗ |α⟩_E is stored as a (d_out·m)×d_in
  matrix with the output index major and the environment index minor.

Only square (d → d) channels are accepted by the Choi conversions.
"""

import logging
from dataclasses import InitVar, dataclass, field

import numpy as np

from pebkit.errors import InputError
from pebkit.numerics import (
    ComplexMatrix,
    DEFAULT_RANK_TOL,
    as_matrix,
    complete_orthonormal,
    complex_gaussian,
    dagger,
    eigh,
    hermiticity_residual,
    max_abs,
    partial_trace,
    psd_power,
    svd,
)

logger = logging.getLogger(__name__)

STATE_TOL = 1e-10
CHANNEL_TOL = 1e-9


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class DensityMatrix:
    """A d×d density operator: Hermitian, unit trace and PSD within ``tol``.

    Every construction is checked. ``tol`` is only used for the check and is
    not stored.
    """
    dim: int
    matrix: ComplexMatrix
    tol: InitVar[float] = STATE_TOL

    def __post_init__(self, tol: float):
        matrix = as_matrix(self.matrix, "density matrix")
        if matrix.shape != (self.dim, self.dim):
            raise InputError(f"density matrix must be {self.dim}x{self.dim}, got {matrix.shape}")
        residual = hermiticity_residual(matrix)
        if residual > tol:
            raise InputError(f"density matrix not Hermitian (residual {residual:.3e})")
        trace = np.trace(matrix).real
        if abs(trace - 1) > tol:
            raise InputError(f"density matrix trace is {trace!r}, expected 1")
        smallest = eigh(matrix, tol=tol)[0][-1]
        if smallest < -tol:
            raise InputError(f"density matrix has negative eigenvalue {smallest:.3e}")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_array(cls, data, tol: float = STATE_TOL) -> "DensityMatrix":
        """Build a state of whatever dimension ``data`` has."""
        matrix = as_matrix(data, "density matrix")
        if matrix.shape[0] != matrix.shape[1]:
            raise InputError(f"density matrix must be square, got {matrix.shape}")
        return cls(dim=matrix.shape[0], matrix=matrix, tol=tol)

    @classmethod
    def pure(cls, vector) -> "DensityMatrix":
        v = np.asarray(vector, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(v)
        if abs(norm - 1) > STATE_TOL:
            raise InputError(f"pure state vector has norm {norm!r}, expected 1")
        return cls(dim=v.size, matrix=np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(dim=d, matrix=np.eye(d, dtype=np.complex128) / d)


@dataclass(frozen=True)
class KrausSet:
    """A list of d_out×d_in Kraus operators.

    Construction only checks shapes and finiteness, so deliberately broken
    sets can still be inspected by :func:`verify_cptp`. Use :meth:`checked`
    when the closure relation must hold.
    """
    operators: tuple[ComplexMatrix, ...]
    d_in: int = field(default=0)
    d_out: int = field(default=0)

    def __post_init__(self):
        ops = tuple(as_matrix(K, f"Kraus operator {a}") for a, K in enumerate(self.operators))
        if not ops:
            raise InputError("a Kraus set needs at least one operator")
        shape = ops[0].shape
        for a, K in enumerate(ops):
            if K.shape != shape:
                raise InputError(f"Kraus operator {a} has shape {K.shape}, expected {shape}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "d_out", shape[0])
        object.__setattr__(self, "d_in", shape[1])

    @classmethod
    def checked(cls, operators, tol: float = CHANNEL_TOL) -> "KrausSet":
        kraus = cls(tuple(operators))
        residual = closure_residual(kraus)
        if residual > tol:
            raise InputError(f"Kraus closure violated: max |Σ K†K - I| = {residual:.3e} > {tol:.1e}")
        return kraus

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    @property
    def d(self) -> int:
        if self.d_in != self.d_out:
            raise InputError(f"channel is not square: {self.d_in} -> {self.d_out}")
        return self.d_in


@dataclass(frozen=True)
class ChoiMatrix:
    """d²×d² Choi state; reference system first (see module docstring)."""
    d: int
    matrix: ComplexMatrix

    def __post_init__(self):
        matrix = as_matrix(self.matrix, "Choi matrix")
        n = self.d * self.d
        if matrix.shape != (n, n):
            raise InputError(f"Choi matrix for d={self.d} must be {n}x{n}, got {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_array(cls, data) -> "ChoiMatrix":
        matrix = as_matrix(data, "Choi matrix")
        d = int(round(np.sqrt(matrix.shape[0])))
        if matrix.shape != (d * d, d * d):
            raise InputError(f"Choi matrix must be d²×d², got {matrix.shape}")
        return cls(d=d, matrix=matrix)


@dataclass(frozen=True)
class StinespringIsometry:
    d_in: int
    d_out: int
    env_dim: int
    V: ComplexMatrix

    def __post_init__(self):
        V = as_matrix(self.V, "Stinespring isometry")
        if V.shape != (self.d_out * self.env_dim, self.d_in):
            raise InputError(
                f"isometry must be {(self.d_out * self.env_dim, self.d_in)}, got {V.shape}"
            )
        object.__setattr__(self, "V", V)

    def block(self, alpha: int) -> ComplexMatrix:
        """The ⟨α|_E block of V, i.e. K_α."""
        return self.V.reshape(self.d_out, self.env_dim, self.d_in)[:, alpha, :]


@dataclass(frozen=True)
class CptpReport:
    trace_preserving: bool
    completely_positive: bool
    max_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.trace_preserving and self.completely_positive


@dataclass(frozen=True)
class ChannelDistance:
    trace_distance: float
    fidelity: float


# =============================================================================
# Kraus form
# =============================================================================

def closure_residual(K: KrausSet) -> float:
    total = sum(dagger(A) @ A for A in K.operators)
    return max_abs(total - np.eye(K.d_in))


def output_tol(d: int, closure_tol: float) -> float:
    """State tolerance for E(ρ) when the channel's closure holds only to ``closure_tol``."""
    return STATE_TOL + d * closure_tol


def apply_kraus(K: KrausSet, rho: DensityMatrix, tol: float = CHANNEL_TOL) -> DensityMatrix:
    """E(ρ) = Σ K ρ K†. The closure relation must hold within ``tol``."""
    if K.d_in != rho.dim:
        raise InputError(f"channel input dimension {K.d_in} does not match state dimension {rho.dim}")
    residual = closure_residual(K)
    if residual > tol:
        raise InputError(f"Kraus closure violated: max |Σ K†K - I| = {residual:.3e} > {tol:.1e}")
    out = sum(A @ rho.matrix @ dagger(A) for A in K.operators)
    return DensityMatrix(dim=K.d_out, matrix=(out + dagger(out)) / 2, tol=output_tol(K.d_in, tol))


def mix_kraus(K: KrausSet, U) -> KrausSet:
    """K'_β = Σ_α U[β, α] K_α. Any isometric U (rows ≥ columns) keeps the channel."""
    U = np.asarray(U, dtype=np.complex128)
    if U.shape[1] != len(K):
        raise InputError(f"mixing matrix has {U.shape[1]} columns for {len(K)} operators")
    stacked = np.stack(K.operators)
    return KrausSet(tuple(np.tensordot(U, stacked, axes=(1, 0))))


# =============================================================================
# Choi-Jamiolkowski correspondence
# =============================================================================

def _choi_vector(A: ComplexMatrix) -> np.ndarray:
    d = A.shape[0]
    return A.T.reshape(-1) / np.sqrt(d)


def kraus_to_choi(K: KrausSet) -> ChoiMatrix:
    d = K.d
    vecs = np.stack([_choi_vector(A) for A in K.operators], axis=1)
    return ChoiMatrix(d=d, matrix=vecs @ dagger(vecs))


def choi_to_kraus(J: ChoiMatrix, tol: float = DEFAULT_RANK_TOL) -> KrausSet:
    """Canonical Kraus operators from the eigendecomposition of J.

    K_α[j, i] = √(d λ_α) v_α[i*d + j] for every eigenvalue λ_α > tol·λmax.
    The set is not unique under degeneracy; compare regenerated Choi matrices.
    """
    d = J.d
    w, v = eigh(J.matrix, tol=max(tol, STATE_TOL))
    lam_max = w[0]
    if lam_max <= 0:
        raise InputError("Choi matrix has no positive eigenvalue")
    if w[-1] < -tol * lam_max:
        raise InputError(f"Choi matrix has negative eigenvalue {w[-1]:.3e}; not a channel")
    keep = w > tol * lam_max
    ops = [np.sqrt(d * lam) * v[:, a].reshape(d, d).T for a, lam in enumerate(w) if keep[a]]
    return KrausSet(tuple(ops))


def choi_apply(J: ChoiMatrix, rho: DensityMatrix) -> DensityMatrix:
    """E(ρ) = d · tr_A[(ρ^T ⊗ I) J]."""
    d = J.d
    if rho.dim != d:
        raise InputError(f"Choi matrix acts on d={d}, state has dimension {rho.dim}")
    T = J.matrix.reshape(d, d, d, d)
    out = d * np.einsum("ik,ijkl->jl", rho.matrix, T)
    return DensityMatrix(dim=d, matrix=(out + dagger(out)) / 2, tol=output_tol(d, CHANNEL_TOL))


# =============================================================================
# Stinespring dilation
# =============================================================================

def kraus_to_stinespring(K: KrausSet) -> StinespringIsometry:
    m = len(K)
    stacked = np.stack(K.operators, axis=1)  # (d_out, m, d_in)
    V = stacked.reshape(K.d_out * m, K.d_in)
    return StinespringIsometry(d_in=K.d_in, d_out=K.d_out, env_dim=m, V=V)


def stinespring_to_kraus(S: StinespringIsometry) -> KrausSet:
    return KrausSet(tuple(S.block(a) for a in range(S.env_dim)))


def stinespring_unitary(S: StinespringIsometry) -> ComplexMatrix:
    """Global unitary U on system⊗environment with U(|ψ⟩⊗|0⟩_E) = V|ψ⟩.

    Rows and columns are ordered system-major, environment-minor, so that
    K_α = ⟨α|_E U |0⟩_E. Requires d_in = d_out.
    """
    if S.d_in != S.d_out:
        raise InputError("a unitary dilation needs d_in = d_out")
    n = S.d_out * S.env_dim
    U = np.zeros((n, n), dtype=np.complex128)
    e0_columns = np.arange(S.d_in) * S.env_dim
    U[:, e0_columns] = S.V
    taken = set(e0_columns.tolist())
    rest = [c for c in range(n) if c not in taken]
    U[:, rest] = complete_orthonormal(S.V, n)[:, S.d_in:]
    return U


def apply_stinespring(S: StinespringIsometry, rho: DensityMatrix) -> DensityMatrix:
    """E(ρ) = tr_E[V ρ V†]."""
    if rho.dim != S.d_in:
        raise InputError(f"isometry input dimension {S.d_in} does not match state dimension {rho.dim}")
    joint = S.V @ rho.matrix @ dagger(S.V)
    out = partial_trace(joint, (S.d_out, S.env_dim), keep=0)
    return DensityMatrix(dim=S.d_out, matrix=(out + dagger(out)) / 2, tol=output_tol(S.d_in, CHANNEL_TOL))


# =============================================================================
# Diagnostics
# =============================================================================

def verify_cptp(channel: KrausSet | ChoiMatrix, tol: float = CHANNEL_TOL) -> CptpReport:
    """Check trace preservation and complete positivity of a Kraus set or Choi matrix."""
    if isinstance(channel, KrausSet):
        tp_residual = closure_residual(channel)
        return CptpReport(
            trace_preserving=tp_residual <= tol,
            completely_positive=True,
            max_violation=tp_residual,
            tol=tol,
        )
    d = channel.d
    J = channel.matrix
    herm = hermiticity_residual(J)
    tp_residual = max_abs(partial_trace(J, (d, d), keep=0) - np.eye(d) / d)
    smallest = float(np.linalg.eigvalsh((J + dagger(J)) / 2)[0])
    cp_residual = max(0.0, -smallest)
    return CptpReport(
        trace_preserving=tp_residual <= tol and herm <= tol,
        completely_positive=cp_residual <= tol and herm <= tol,
        max_violation=max(tp_residual, cp_residual, herm),
        tol=tol,
    )


def channel_distance(J1: ChoiMatrix, J2: ChoiMatrix) -> ChannelDistance:
    """Trace distance ½‖J1 - J2‖₁ and Uhlmann fidelity of two Choi states."""
    if J1.d != J2.d:
        raise InputError(f"Choi dimensions differ: {J1.d} vs {J2.d}")
    diff = J1.matrix - J2.matrix
    trace_distance = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + dagger(diff)) / 2))))
    # (tr √(√A B √A))² = ‖√A √B‖₁²
    root1 = psd_power(J1.matrix, 0.5)
    root2 = psd_power(J2.matrix, 0.5)
    fidelity = float(np.sum(svd(root1 @ root2)[1])) ** 2
    return ChannelDistance(
        trace_distance=float(np.clip(trace_distance, 0.0, 1.0)),
        fidelity=float(np.clip(fidelity, 0.0, 1.0)),
    )


def random_density(d: int, seed: int | None, rank: int | None = None) -> DensityMatrix:
    """Random mixed state G G† / tr(G G†) with G a d×rank complex Gaussian."""
    rng = np.random.default_rng(seed)
    G = complex_gaussian((d, rank or d), rng)
    rho = G @ dagger(G)
    return DensityMatrix(dim=d, matrix=rho / np.trace(rho).real)
