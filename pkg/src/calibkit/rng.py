"""Seeded random streams.

Every stream is a Philox counter-based generator keyed by ``(seed, *key)``,
so replicate ``j`` of a resampling run draws the same numbers no matter
which worker computes it or in what order.
"""

import numpy as np

DEFAULT_SEED = 1729
SEED_ENV_VAR = "CALIBKIT_SEED"


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an integer seed or None (the default seed)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(DEFAULT_SEED if rng is None else rng)
