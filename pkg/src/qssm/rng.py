"""Deterministic seed splitting.

Every random stream is derived from one top-level 64-bit seed plus a path of
keys, e.g. ``child_rng(seed, "layer", 3)``. String keys are mapped to integers
with CRC-32 so the derivation is stable across processes and platforms; the
path is then used as a ``SeedSequence`` spawn key.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    return int(k)


def seed_sequence(seed: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(_key(k) for k in keys))


def child_rng(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *keys))


def split_seed(seed: int, *keys) -> int:
    """A derived 64-bit seed for APIs that take integers."""
    lo, hi = seed_sequence(seed, *keys).generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
