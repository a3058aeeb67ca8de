"""Counter-based random streams.

Every realization draws from its own Philox stream keyed by the master seed,
with the realization index (and resample attempt) placed in the high words
of the 256-bit counter.  A stream therefore depends only on
``(master_seed, index, attempt)``, never on which worker produced it or in
what order, and distinct indices cannot overlap (each owns 2**128 blocks).
"""

from __future__ import annotations

import functools

import numpy as np

MAX_SEED = 2**64 - 1


@functools.lru_cache(maxsize=64)
def _philox_key(master_seed: int) -> tuple[int, int]:
    state = np.random.SeedSequence(master_seed).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def stream(master_seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Generator for realization ``index`` under ``master_seed``."""
    if not 0 <= master_seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {master_seed}")
    if index < 0 or attempt < 0:
        raise ValueError("index and attempt must be non-negative")
    k0, k1 = _philox_key(int(master_seed))
    key = np.array([k0, k1], dtype=np.uint64)
    counter = np.array([0, 0, index, attempt], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
