"""Shared generators for the test suite."""

import numpy as np

from sigpde import TimeSeries


def random_walk(rng, length, dim, amp):
    """Gaussian random walk on a uniform [0, 1] grid with total scale ~amp.

    Per-step deviation amp/sqrt(length) keeps the end-to-end displacement at
    the amp scale regardless of length; entries are guard-rescaled into
    [-1, 1].
    """
    steps = rng.normal(0.0, amp / np.sqrt(length), size=(length, dim))
    values = np.cumsum(steps, axis=0)
    peak = np.max(np.abs(values))
    if peak > 1.0:
        values = values / peak
    return TimeSeries(np.linspace(0.0, 1.0, length), values)


def walk_pair(rng, length, dim, amp):
    """A pair of independent random walks with shared shape parameters."""
    return (random_walk(rng, length, dim, amp),
            random_walk(rng, length, dim, amp))
