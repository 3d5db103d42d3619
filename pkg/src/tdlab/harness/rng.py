"""Seed derivation.

Each run seed is expanded into independent PCG64 streams with the SplitMix64
finalizer, so any implementation of the same two functions reproduces the streams:

    stream_seed(seed, k) = splitmix64((splitmix64(seed) + k) mod 2**64)
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1

# stream ids
INIT, ENV, POLICY, REPLAY = 0, 1, 2, 3


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream_seed(seed: int, stream: int) -> int:
    return splitmix64((splitmix64(seed & MASK) + stream) & MASK)


def make_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(stream_seed(seed, stream)))
