"""Random generator plumbing.

All randomness uses NumPy's PCG64. A run-level generator is derived from a
master seed and a run counter as ``SeedSequence(master, spawn_key=(counter,))``,
so run ``k`` draws the same numbers no matter how many runs follow it.
"""

from __future__ import annotations

import numpy as np


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed or Generator is required")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def run_generator(master_seed: int, counter: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(counter),))
    return np.random.Generator(np.random.PCG64(ss))
