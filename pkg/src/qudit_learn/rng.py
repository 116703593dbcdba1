"""Seeded random streams.

Every stochastic routine takes either an integer seed or a ready Generator.
Integer seeds are expanded with ``np.random.SeedSequence`` into a Philox
(counter-based, 64-bit) bit generator. Parallel work never shares a stream:
trial ``i`` of a run seeded with ``s`` draws from ``substream(s, ..., i)``,
so results do not depend on scheduling or on the number of workers.
"""
from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator]


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream labelled by ``(seed, *keys)``."""
    words = [int(seed), *(int(k) for k in keys)]
    if any(w < 0 for w in words):
        raise ValueError(f"seed and stream keys must be non-negative, got {words}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(seed)


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for a child stream, for APIs that take plain ints."""
    words = [int(seed), *(int(k) for k in keys)]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])
