"""Named, counter-based random streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``. Streams
are Philox generators keyed by an integer seed plus a path of stream names, so
an experiment can hand independent streams to its stages and trials without
them depending on each other's consumption.
"""

from __future__ import annotations

import zlib

import numpy as np


def _name_word(name) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name) & 0xFFFFFFFF
    return zlib.crc32(str(name).encode())


def make_rng(seed: int, *names) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_name_word(n) for n in names]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def child(rng: np.random.Generator, *names) -> np.random.Generator:
    """Derive an independent named stream from an existing generator."""
    base = int(rng.integers(0, 2**63 - 1))
    return make_rng(base, *names)
