"""Seeded random-number streams with a documented split operation.

All sampling in the package is bit-reproducible given (seed, call order).
Streams are derived from a 64-bit root seed through ``numpy.random.SeedSequence``,
whose ``spawn`` mechanism guarantees statistically independent children.  Parallel
work must use one child stream per task, keyed by task index, so the schedule
cannot change the numbers a task sees.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Root generator for a 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def split_rng(seed: int, *indices: int) -> np.random.Generator:
    """Child generator for a (seed, index path).

    ``split_rng(s, i, j)`` is the j-th substream of the i-th substream of s.
    Distinct index paths give independent streams; repeated calls with the
    same path give identical streams.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(indices)))
