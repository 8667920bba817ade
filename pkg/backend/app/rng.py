"""
Seeded random streams

Every stochastic output (projectors, simulations, chains) comes from a Philox
counter-based generator so a single config seed reproduces a whole run.
"""
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    """Build a Philox generator from a seed, a SeedSequence or pass a Generator through"""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def child_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Stream keyed by (seed, *key); independent of scheduling order"""
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))

