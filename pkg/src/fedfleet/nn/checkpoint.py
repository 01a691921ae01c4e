"""Versioned binary model checkpoints.

Layout: magic, format version, header length (uint32 LE), JSON header
(architecture, partition table, convention notes, caller metadata), then the
flat float64 little-endian parameter payload. Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import CheckpointError
from .arch import ArchSpec, build_partition

MAGIC = b"FFCP"
VERSION = 1


def save_checkpoint(path, vec: np.ndarray, arch: ArchSpec, meta: dict | None = None) -> None:
    part = build_partition(arch)
    if len(vec) != part.total:
        raise CheckpointError(f"vector length {len(vec)} does not match arch ({part.total})")
    header = {
        "arch": {
            "kind": arch.kind,
            "window": arch.window,
            "input_dim": arch.input_dim,
            "hidden": list(arch.hidden),
            "dropout": list(arch.dropout),
        },
        "partition": [[s.name, list(s.shape)] for s in part.segments],
        "notes": part.notes,
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(vec, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (vec, arch, partition, meta)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(raw[12 : 12 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header ({e})") from None
    a = header["arch"]
    arch = ArchSpec(
        kind=a["kind"],
        window=a["window"],
        input_dim=a["input_dim"],
        hidden=tuple(a["hidden"]),
        dropout=tuple(a["dropout"]),
    )
    part = build_partition(arch)
    recorded = [[s.name, list(s.shape)] for s in part.segments]
    if recorded != header["partition"]:
        raise CheckpointError(f"{path}: partition table does not match architecture")
    vec = np.frombuffer(raw[12 + hlen :], dtype="<f8").astype(float)
    if len(vec) != part.total:
        raise CheckpointError(f"{path}: payload has {len(vec)} values, expected {part.total}")
    return vec, arch, part, header["meta"]
