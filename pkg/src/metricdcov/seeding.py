"""Seed splitting.

Replication ``r`` of cell ``c`` under master seed ``s`` draws from
``SeedSequence(entropy=s, spawn_key=(c, r))``.  ``SeedSequence`` hashes the
entropy and spawn key into the generator state, so every stream is fixed by
its coordinates alone and results do not depend on scheduling.
"""
from __future__ import annotations

import numpy as np


def seed_sequence(seed, *key: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def replication_rng(seed, *key: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *key))


def check_seed(seed) -> int:
    """Validate a master seed as a non-negative integer below 2**64."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed
