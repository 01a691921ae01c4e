"""Architecture descriptions, flat parameter vectors, and initialization.

All three model kinds share one parameter representation: a flat float64
vector tiled exactly by an ordered list of named segments. Federated
aggregation, checkpointing, and the shared/personal split all operate on
segment names, never on layer objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PartitionError

KINDS = ("ann", "gru", "lstm")

# gates per recurrent step, and the convention strings recorded in partitions
GATE_COUNT = {"lstm": 4, "gru": 3}
CONVENTIONS = {
    "lstm": "lstm gates i,f,g,o on combined W[(in+h) x 4h]; single bias; forget bias init 1.0",
    "gru": "gru gates r,z,n on combined W[(in+h) x 3h]; candidate uses (r*h) before Whn; zero bias",
    "ann": "dense tanh stack on the flattened window",
}


@dataclass(frozen=True)
class ArchSpec:
    kind: str
    window: int = 60
    input_dim: int = 5
    hidden: tuple = (40, 32, 16)
    dropout: tuple = (0.10, 0.20)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.window < 1 or self.input_dim < 1:
            raise ValueError("window and input_dim must be >= 1")
        if len(self.hidden) < 1 or any(int(h) < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be positive")
        if len(self.dropout) != len(self.hidden) - 1:
            raise ValueError("need one dropout rate per hidden-layer gap")
        if any(not 0.0 <= p < 1.0 for p in self.dropout):
            raise ValueError("dropout rates must lie in [0,1)")

    @property
    def layer_prefix(self):
        return {"ann": "dense", "gru": "gru", "lstm": "lstm"}[self.kind]


@dataclass(frozen=True)
class Segment:
    name: str
    shape: tuple
    offset: int

    @property
    def size(self):
        return int(np.prod(self.shape))


@dataclass(frozen=True)
class LayerPartition:
    segments: tuple
    notes: str

    @property
    def total(self):
        last = self.segments[-1]
        return last.offset + last.size

    def names(self):
        return [s.name for s in self.segments]

    def segment(self, name: str) -> Segment:
        for s in self.segments:
            if s.name == name:
                return s
        raise PartitionError(f"no segment named {name!r}")

    def slice_of(self, name: str) -> slice:
        s = self.segment(name)
        return slice(s.offset, s.offset + s.size)

    def views(self, vec: np.ndarray) -> dict:
        """Named reshaped views sharing memory with the flat vector."""
        if len(vec) != self.total:
            raise PartitionError(f"vector length {len(vec)} != partition total {self.total}")
        return {
            s.name: vec[s.offset : s.offset + s.size].reshape(s.shape)
            for s in self.segments
        }


def build_partition(arch: ArchSpec) -> LayerPartition:
    segs = []
    offset = 0

    def add(name, shape):
        nonlocal offset
        segs.append(Segment(name=name, shape=tuple(shape), offset=offset))
        offset += int(np.prod(shape))

    prefix = arch.layer_prefix
    if arch.kind == "ann":
        d = arch.window * arch.input_dim
        for i, h in enumerate(arch.hidden, start=1):
            add(f"{prefix}{i}.W", (d, h))
            add(f"{prefix}{i}.b", (h,))
            d = h
    else:
        gates = GATE_COUNT[arch.kind]
        d = arch.input_dim
        for i, h in enumerate(arch.hidden, start=1):
            add(f"{prefix}{i}.W", (d + h, gates * h))
            add(f"{prefix}{i}.b", (gates * h,))
            d = h
    add("out.W", (arch.hidden[-1], 1))
    add("out.b", (1,))
    return LayerPartition(segments=tuple(segs), notes=CONVENTIONS[arch.kind])


def init_model(arch: ArchSpec, seed: int):
    """Glorot-uniform weights, zero biases (LSTM forget bias 1.0).

    Returns (flat vector, partition); deterministic per (arch, seed).
    """
    part = build_partition(arch)
    vec = np.zeros(part.total)
    rng = np.random.Generator(np.random.PCG64(seed))
    views = part.views(vec)
    for seg in part.segments:
        if seg.name.endswith(".W"):
            fan_in, fan_out = seg.shape
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            views[seg.name][:] = rng.uniform(-limit, limit, size=seg.shape)
        elif arch.kind == "lstm" and seg.name.endswith(".b") and seg.name != "out.b":
            h = seg.shape[0] // 4
            views[seg.name][h : 2 * h] = 1.0
    return vec, part


def unflatten(vec: np.ndarray, part: LayerPartition) -> dict:
    """Copy the flat vector out into named arrays."""
    return {k: v.copy() for k, v in part.views(vec).items()}


def flatten(named: dict, part: LayerPartition) -> np.ndarray:
    """Inverse of unflatten; complains about missing or misshapen segments."""
    vec = np.empty(part.total)
    for seg in part.segments:
        if seg.name not in named:
            raise PartitionError(f"missing segment {seg.name!r}")
        arr = np.asarray(named[seg.name])
        if arr.shape != seg.shape:
            raise PartitionError(f"segment {seg.name!r} has shape {arr.shape}, want {seg.shape}")
        vec[seg.offset : seg.offset + seg.size] = arr.ravel()
    return vec
