"""Deterministic RNG stream derivation.

Every random choice in a run draws from a stream derived from the run's master
seed plus a stable purpose tag, so reruns are byte-identical and independent
components never share a stream.
"""

from __future__ import annotations

import numpy as np

# purpose tags; values are arbitrary but frozen
NODE_STREAM = 1
TRAFFIC_STREAM = 2
GAME_STREAM = 3
BURN_STREAM = 4
MASK_STREAM = 5
ORACLE_STREAM = 6
ROLE_STREAM = 7
ROUND_STREAM = 8
DECIDE_STREAM = 9
SWEEP_STREAM = 10


def seed_key(seed, *tags) -> tuple:
    """Flatten a seed (int or tuple) plus purpose tags into a SeedSequence key."""
    base = tuple(seed) if isinstance(seed, tuple) else (seed,)
    return tuple(int(x) for x in base + tags)


def derive_rng(seed, *tags) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed_key(seed, *tags)))
