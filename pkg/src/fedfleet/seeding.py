"""Deterministic named seed derivation.

Every stochastic component gets its own ``np.random.Generator`` derived from a
root seed plus a path of string/int parts. Hashing the path keeps independent
streams decorrelated while making every draw reproducible from the single
root. The derivation deliberately contains nothing about which aggregation
algorithm is running, so two algorithms that are analytically equivalent see
bit-identical randomness.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, *path: object) -> int:
    """Derive a 64-bit child seed from ``root`` and a path of labels."""
    h = hashlib.sha256()
    h.update(str(int(root)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little")


def make_rng(root: int, *path: object) -> np.random.Generator:
    """Generator seeded by :func:`derive_seed`."""
    return np.random.Generator(np.random.PCG64(derive_seed(root, *path)))
