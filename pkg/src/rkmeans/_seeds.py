"""Deterministic RNG stream derivation.

All randomness in the package flows through Philox (a counter-based 64-bit
generator) seeded via ``numpy.random.SeedSequence`` spawn keys, so any
(seed, context-key...) pair names the same stream on every platform and
regardless of scheduling.
"""
from __future__ import annotations

import numpy as np


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for the given seed and context key."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def spawn_seed(seed: int, *key: int) -> int:
    """Derived 64-bit integer seed for handing to a nested component."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])
