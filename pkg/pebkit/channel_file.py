# pebkit/channel_file.py
"""JSON interchange format for channels, states and protocol transcripts.

Format ``pebkit-channel/1``:

    {
      "format_version": "pebkit-channel/1",
      "d": 2,
      "representation": "kraus" | "choi" | "stinespring" | "state",
      "data": ...,
      "metadata": {...}
    }

Complex entries are ``[re, im]`` pairs of JSON numbers. Python writes floats
with their shortest round-trip repr, so a write/read cycle is bit-exact.

Layouts:
    kraus        data[alpha][row][col]
    choi         data[row][col], rows indexed i*d + j for |i⟩_A ⊗ |j⟩_B
    stinespring  data[row][col] of V, rows indexed out*env_dim + env
    state        data[row][col]
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pebkit.channels import (
    ChoiMatrix,
    DensityMatrix,
    KrausSet,
    StinespringIsometry,
    stinespring_to_kraus,
)
from pebkit.errors import InputError
from pebkit.protocol import ProtocolTranscript

logger = logging.getLogger(__name__)

FORMAT_VERSION = "pebkit-channel/1"
REPRESENTATIONS = ("kraus", "choi", "stinespring", "state")


def encode_matrix(M) -> list:
    M = np.asarray(M, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def decode_matrix(rows, where: str) -> np.ndarray:
    """Parse nested [re, im] pairs, naming the first invalid position in errors."""
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{where}: expected a non-empty list of rows")
    width = None
    out = []
    for r, row in enumerate(rows):
        if not isinstance(row, list):
            raise InputError(f"{where}[{r}]: expected a list of [re, im] pairs")
        if width is None:
            width = len(row)
        if len(row) != width or width == 0:
            raise InputError(f"{where}[{r}]: row has {len(row)} entries, expected {width}")
        parsed = []
        for c, pair in enumerate(row):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
            ):
                raise InputError(f"{where}[{r}][{c}]: expected [re, im] numbers, got {pair!r}")
            parsed.append(complex(pair[0], pair[1]))
        out.append(parsed)
    arr = np.array(out, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{where}: non-finite entry")
    return arr


@dataclass
class ChannelFile:
    d: int
    representation: str
    data: list
    metadata: dict = field(default_factory=dict)
    format_version: str = FORMAT_VERSION

    # ---- construction -------------------------------------------------------

    @classmethod
    def from_kraus(cls, K: KrausSet, metadata: dict | None = None) -> "ChannelFile":
        return cls(d=K.d, representation="kraus", data=[encode_matrix(A) for A in K.operators],
                   metadata=metadata or {})

    @classmethod
    def from_choi(cls, J: ChoiMatrix, metadata: dict | None = None) -> "ChannelFile":
        return cls(d=J.d, representation="choi", data=encode_matrix(J.matrix), metadata=metadata or {})

    @classmethod
    def from_stinespring(cls, S: StinespringIsometry, metadata: dict | None = None) -> "ChannelFile":
        meta = dict(metadata or {})
        meta["env_dim"] = S.env_dim
        return cls(d=S.d_in, representation="stinespring", data=encode_matrix(S.V), metadata=meta)

    @classmethod
    def from_state(cls, rho: DensityMatrix, metadata: dict | None = None) -> "ChannelFile":
        return cls(d=rho.dim, representation="state", data=encode_matrix(rho.matrix), metadata=metadata or {})

    # ---- decoding -----------------------------------------------------------

    def to_channel(self) -> KrausSet | ChoiMatrix:
        if self.representation == "kraus":
            if not isinstance(self.data, list) or not self.data:
                raise InputError("data: expected a non-empty list of Kraus operators")
            ops = [decode_matrix(op, f"data[{a}]") for a, op in enumerate(self.data)]
            for a, A in enumerate(ops):
                if A.shape != (self.d, self.d):
                    raise InputError(f"data[{a}]: operator shape {A.shape} does not match d={self.d}")
            return KrausSet(tuple(ops))
        if self.representation == "choi":
            J = decode_matrix(self.data, "data")
            if J.shape != (self.d**2, self.d**2):
                raise InputError(f"data: Choi shape {J.shape} does not match d={self.d}")
            return ChoiMatrix(d=self.d, matrix=J)
        if self.representation == "stinespring":
            env_dim = self.metadata.get("env_dim")
            if not isinstance(env_dim, int) or env_dim < 1:
                raise InputError("metadata.env_dim: expected a positive integer")
            V = decode_matrix(self.data, "data")
            if V.shape != (self.d * env_dim, self.d):
                raise InputError(f"data: isometry shape {V.shape} does not match d={self.d}, env_dim={env_dim}")
            return stinespring_to_kraus(StinespringIsometry(d_in=self.d, d_out=self.d, env_dim=env_dim, V=V))
        raise InputError(f"representation: '{self.representation}' does not describe a channel")

    def to_state(self) -> DensityMatrix:
        if self.representation != "state":
            raise InputError(f"representation: expected 'state', got '{self.representation}'")
        rho = decode_matrix(self.data, "data")
        if rho.shape != (self.d, self.d):
            raise InputError(f"data: state shape {rho.shape} does not match d={self.d}")
        return DensityMatrix.from_array(rho)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "d": self.d,
            "representation": self.representation,
            "data": self.data,
            "metadata": self.metadata,
        }


def parse_channel_file(payload: dict) -> ChannelFile:
    """Validate the header fields in file order and build a ChannelFile."""
    if not isinstance(payload, dict):
        raise InputError("file: expected a JSON object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise InputError(f"format_version: expected '{FORMAT_VERSION}', got {version!r}")
    d = payload.get("d")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise InputError(f"d: expected a positive integer, got {d!r}")
    representation = payload.get("representation")
    if representation not in REPRESENTATIONS:
        raise InputError(f"representation: expected one of {REPRESENTATIONS}, got {representation!r}")
    if "data" not in payload:
        raise InputError("data: missing")
    metadata = payload.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InputError("metadata: expected an object")
    return ChannelFile(d=d, representation=representation, data=payload["data"], metadata=metadata,
                       format_version=version)


def read_channel_file(path: str | Path) -> ChannelFile:
    try:
        with open(path, "r") as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise InputError(f"file: malformed JSON in {path} ({e.msg} at line {e.lineno})")
    except OSError as e:
        raise InputError(f"file: cannot read {path} ({e.strerror})")
    return parse_channel_file(payload)


def _dump(payload: dict, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(payload, f, indent=1)
            f.write("\n")
    except OSError as e:
        raise InputError(f"file: cannot write {path} ({e.strerror})")
    return path


def write_channel_file(channel_file: ChannelFile, path: str | Path) -> None:
    path = _dump(channel_file.to_dict(), path)
    logger.info(f"Wrote {channel_file.representation} file for d={channel_file.d} to {path}")


def encode_transcript(transcript: ProtocolTranscript) -> dict:
    return {
        "mode": transcript.mode,
        "k": transcript.k,
        "one_way": transcript.one_way,
        "dropped_mass": transcript.dropped_mass,
        "shots": transcript.shots,
        "seed": transcript.seed,
        "outcomes": [
            {
                "message": {
                    "alpha": o.message.alpha,
                    "m": o.message.m,
                    "n": o.message.n,
                    "from": o.message.sender,
                    "to": o.message.receiver,
                },
                "probability": o.probability,
                "count": o.count,
                "bob_output": encode_matrix(o.bob_output.matrix),
            }
            for o in transcript.outcomes
        ],
    }


def write_transcript(transcript: ProtocolTranscript, path: str | Path) -> None:
    path = _dump(encode_transcript(transcript), path)
    logger.info(f"Wrote {transcript.mode} transcript with {len(transcript.outcomes)} outcomes to {path}")
