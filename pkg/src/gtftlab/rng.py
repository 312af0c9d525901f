"""Seeded random streams.

Every run derives all randomness from one 64-bit seed. Components pull
named substreams so that enlarging one component (more trials, more
steps) never perturbs the draws seen by another.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *key: str | int) -> np.random.Generator:
    """Return the generator for substream ``key`` of ``seed``.

    Keys are strings or small ints; strings are hashed with crc32 so the
    mapping is stable across processes and platforms.
    """
    words = []
    for part in key:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")))
        else:
            words.append(int(part) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(words)))


def ensure_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    """Coerce an int seed (or None) into a numpy Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
