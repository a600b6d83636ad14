# pebkit/zoo.py
"""
Named and randomized channel generators with known Schmidt-number structure.

Every generator is registered under its CLI name (see pebkit.registry) and
returns a :class:`ChannelSpec` whose Kraus set has passed the CPTP check.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from pebkit.channels import KrausSet, mix_kraus, verify_cptp
from pebkit.errors import InputError
from pebkit.numerics import complex_gaussian, dagger, haar_random_unitary, numerical_rank, psd_power
from pebkit.protocol import weyl
from pebkit.registry import generator, make_channel

logger = logging.getLogger(__name__)

MAX_RESAMPLES = 16
ADMISSION_TOL = 1e-9


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    d: int
    params: dict
    kraus: KrausSet
    known_sn_bounds: tuple[int, int]
    provenance: str = ""

    def __post_init__(self):
        lower, upper = self.known_sn_bounds
        if not 1 <= lower <= upper <= self.d:
            raise InputError(f"{self.name}: inconsistent Schmidt-number bounds {self.known_sn_bounds}")
        report = verify_cptp(self.kraus, ADMISSION_TOL)
        if not report.passed:
            raise InputError(f"{self.name}: generated channel is not CPTP (violation {report.max_violation:.3e})")


def _fidelity_class(F: float, d: int) -> int:
    return min(max(math.ceil(F * d - 1e-9), 1), d)


def _check_probability(value: float, pname: str) -> None:
    if not 0 <= value <= 1:
        raise InputError(f"{pname} must lie in [0, 1], got {value}")


@generator("depolarizing")
def depolarizing(d: int, p: float) -> ChannelSpec:
    """E(ρ) = (1-p)ρ + p·I/d, expanded in the Weyl basis (d² Kraus operators).

    d: dimension
    p: depolarizing probability in [0, 1]
    """
    _check_probability(p, "p")
    ops = [np.sqrt(1 - p + p / d**2) * np.eye(d, dtype=np.complex128)]
    ops += [np.sqrt(p) / d * weyl(d, m, n) for m in range(d) for n in range(d) if (m, n) != (0, 0)]
    # isotropic Choi state: the fidelity criterion is exact
    sn = _fidelity_class(1 - p + p / d**2, d)
    return ChannelSpec(
        name="depolarizing",
        d=d,
        params={"p": p},
        kraus=KrausSet(tuple(ops)),
        known_sn_bounds=(sn, sn),
        provenance="isotropic Choi state; Schmidt number fixed by its entangled fraction",
    )


@generator("dephasing")
def dephasing(d: int, p: float) -> ChannelSpec:
    """Kraus {√(1-p)·I} ∪ {√(p/(d-1))·Z^j : 1 ≤ j < d}.

    d: dimension (>= 2)
    p: dephasing probability in [0, 1]
    """
    if d < 2:
        raise InputError(f"dephasing needs d >= 2, got {d}")
    _check_probability(p, "p")
    Z = weyl(d, 0, 1)
    ops = [np.sqrt(1 - p) * np.eye(d, dtype=np.complex128)]
    ops += [np.sqrt(p / (d - 1)) * np.linalg.matrix_power(Z, j) for j in range(1, d)]
    weights = [1 - p] + [p / (d - 1)] * (d - 1)
    complete = np.allclose(weights, 1 / d, atol=1e-12)
    lower = 1 if complete else _fidelity_class(max(weights), d)
    return ChannelSpec(
        name="dephasing",
        d=d,
        params={"p": p},
        kraus=KrausSet(tuple(ops)),
        known_sn_bounds=(lower, 1 if complete else d),
        provenance="Choi state is a mixture of orthogonal maximally entangled states",
    )


@generator("amplitude-damping")
def amplitude_damping_qubit(gamma: float) -> ChannelSpec:
    """K0 = diag(1, √(1-γ)), K1 = √γ·|0⟩⟨1|.

    gamma: damping probability in [0, 1]
    """
    _check_probability(gamma, "gamma")
    K0 = np.diag([1.0, np.sqrt(1 - gamma)]).astype(np.complex128)
    K1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=np.complex128)
    eb = gamma == 1
    return ChannelSpec(
        name="amplitude-damping",
        d=2,
        params={"gamma": gamma},
        kraus=KrausSet((K0, K1)),
        known_sn_bounds=(1, 1) if eb else (2, 2),
        provenance="rank-1 Kraus set at γ=1; negative partial transpose of the Choi state for γ<1",
    )


@generator("werner-holevo")
def werner_holevo(d: int) -> ChannelSpec:
    """Kraus {(|i⟩⟨j| - |j⟩⟨i|)/√(d-1) : i < j}, every operator of rank 2.

    d: dimension (>= 2)
    """
    if d < 2:
        raise InputError(f"werner-holevo needs d >= 2, got {d}")
    ops = []
    for i in range(d):
        for j in range(i + 1, d):
            A = np.zeros((d, d), dtype=np.complex128)
            A[i, j], A[j, i] = 1.0, -1.0
            ops.append(A / np.sqrt(d - 1))
    return ChannelSpec(
        name="werner-holevo",
        d=d,
        params={},
        kraus=KrausSet(tuple(ops)),
        known_sn_bounds=(2, 2),
        provenance="rank-2 Kraus set; antisymmetric Choi state has a negative partial transpose",
    )


@generator("measure-prepare")
def measure_prepare(d: int, seed: int, outcomes: int | None = None) -> ChannelSpec:
    """Random entanglement-breaking channel: rank-1 POVM followed by random pure preparations.

    d: dimension
    seed: random seed
    outcomes: number of POVM outcomes (default 2d, at least d)
    """
    n = outcomes or 2 * d
    if n < d:
        raise InputError(f"a rank-1 POVM on d={d} needs at least {d} outcomes, got {n}")
    povm_seed, state_seed = np.random.SeedSequence(seed).spawn(2)
    rows = haar_random_unitary(n, povm_seed)[:, :d]  # n×d isometry, Σ_i rows_i† rows_i = I
    rng = np.random.default_rng(state_seed)
    ops = []
    for i in range(n):
        phi = complex_gaussian((d,), rng)
        phi /= np.linalg.norm(phi)
        ops.append(np.outer(phi, rows[i]))
    return ChannelSpec(
        name="measure-prepare",
        d=d,
        params={"seed": seed, "outcomes": n},
        kraus=KrausSet(tuple(ops)),
        known_sn_bounds=(1, 1),
        provenance="measure-and-prepare form: every Kraus operator has rank 1",
    )


@generator("unitary")
def unitary_channel(d: int, seed: int | None = None) -> ChannelSpec:
    """Single Haar-random Kraus operator; no seed gives the identity channel.

    d: dimension
    seed: random seed (omit for the identity)
    """
    U = np.eye(d, dtype=np.complex128) if seed is None else haar_random_unitary(d, seed)
    return ChannelSpec(
        name="unitary",
        d=d,
        params={} if seed is None else {"seed": seed},
        kraus=KrausSet((U,)),
        known_sn_bounds=(d, d),
        provenance="unitary channels have a maximally entangled Choi state",
    )


@generator("random-rank-k")
def random_rank_k_channel(d: int, k: int, num_kraus: int, seed: int, scramble: bool = False) -> ChannelSpec:
    """Random channel in O_k from rank-≤k Gaussian factors, optionally Haar-scrambled.

    d: dimension
    k: maximal Kraus rank (1 <= k <= d)
    num_kraus: number of Kraus operators
    seed: random seed
    scramble: mix the operators with a Haar unitary
    """
    if not 1 <= k <= d:
        raise InputError(f"k must lie in [1, {d}], got {k}")
    if num_kraus < 1:
        raise InputError(f"num_kraus must be >= 1, got {num_kraus}")
    if num_kraus * k < d:
        # Σ A†A has rank <= num_kraus·k and could never be normalized
        raise InputError(f"random-rank-k: num_kraus * k = {num_kraus * k} < d = {d}; no channel exists")
    *attempt_seeds, scramble_seed = np.random.SeedSequence(seed).spawn(MAX_RESAMPLES + 1)
    for attempt, child in enumerate(attempt_seeds):
        rng = np.random.default_rng(child)
        draws = [complex_gaussian((d, k), rng) @ complex_gaussian((k, d), rng) for _ in range(num_kraus)]
        total = sum(dagger(A) @ A for A in draws)
        if numerical_rank(total) == d:
            break
        logger.warning(f"random-rank-k: singular normalizer on attempt {attempt}, resampling")
    else:
        raise InputError(f"random-rank-k: no full-rank normalizer after {MAX_RESAMPLES} draws (d={d}, k={k})")
    # right multiplication by (Σ A†A)^(-1/2) cannot raise rank
    correction = psd_power(total, -0.5)
    kraus = KrausSet(tuple(A @ correction for A in draws))
    if scramble:
        kraus = mix_kraus(kraus, haar_random_unitary(num_kraus, scramble_seed))
    return ChannelSpec(
        name="random-rank-k",
        d=d,
        params={"k": k, "num_kraus": num_kraus, "seed": seed, "scramble": scramble},
        kraus=kraus,
        known_sn_bounds=(1, k),
        provenance="constructed from rank-<=k operators; Kraus mixing preserves membership in O_k",
    )


# =============================================================================
# Corpus
# =============================================================================

@dataclass(frozen=True)
class CorpusEntry:
    spec: ChannelSpec
    k: int
    tags: tuple[str, ...] = field(default_factory=tuple)


def load_corpus(path: str | Path) -> list[CorpusEntry]:
    """Build the channels listed in a corpus YAML file.

    Each entry names a generator and its params; ``k`` defaults to the known
    upper Schmidt-number bound.
    """
    with open(path, "r") as f:
        data = yaml.safe_load(f)
    entries = []
    for item in data.get("channels", []):
        spec = make_channel(item["generator"], **item.get("params", {}))
        k = int(item.get("k", spec.known_sn_bounds[1]))
        entries.append(CorpusEntry(spec=spec, k=k, tags=tuple(item.get("tags", []))))
    logger.info(f"Loaded {len(entries)} corpus channels from {path}")
    return entries
