"""Input validation helpers shared across modules."""

from __future__ import annotations

import numbers

import numpy as np

# weights at or below this are treated as non-positive: u ** (1 / w) degenerates
WEIGHT_FLOOR = 1e-300


def check_scores(scores, name="scores", allow_empty=False):
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_weights(weights):
    arr = check_scores(weights, name="weights")
    if np.any(arr <= WEIGHT_FLOOR):
        raise ValueError("sampling weights must be strictly positive (> 1e-300)")
    return arr


def check_nonnegative(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite real >= 0, got {value!r}")
    return float(value)


def check_permutation(ranking, n):
    order = np.asarray(ranking)
    if order.ndim != 1 or order.size != n or not np.issubdtype(order.dtype, np.integer):
        raise ValueError(f"ranking must be a permutation of range({n})")
    if not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError(f"ranking must be a permutation of range({n})")
    return order


def check_rng(rng):
    """Return a ``numpy.random.Generator`` from a seed, generator or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(rng)
    raise ValueError(f"cannot build a Generator from {rng!r}")
