from dataclasses import dataclass, field


@dataclass
class Tolerances:
    rank: float = 1e-10
    cptp: float = 1e-9
    theorem: float = 1e-8


@dataclass
class SearchConfig:
    """Settings for the Kraus-rank search over unitary mixings."""
    restarts: int = 32
    max_iters: int = 2000
    step: float = 0.5
    seed: int = 0
    tol: float = 1e-10
    pad_operators: int = 0  # zero operators appended to the canonical set
    workers: int = 1


@dataclass
class ProtocolConfig:
    drop_threshold: float = 1e-14
    closure_tol: float = 1e-9  # set from tolerances.cptp by the CLI
    block_size: int = 1024
    workers: int = 1


@dataclass
class Config:
    tolerances: Tolerances = field(default_factory=Tolerances)
    search: SearchConfig = field(default_factory=SearchConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
