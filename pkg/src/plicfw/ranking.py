"""Ranking policies and Plackett-Luce sampling.

Every stochastic policy assigns each candidate a positive weight and draws a
ranking from the Plackett-Luce distribution those weights induce. Sampling
uses exponential keys: item ``i`` gets ``u_i ** (1 / w_i)`` with ``u_i``
uniform on (0, 1), and the ranking is the keys in decreasing order.

Internally weights travel as logarithms so that very peaked policies (large
``beta * r``) never overflow or underflow.

The frequency-weighted policies read the candidate frequency ``W`` either as
a raw count of candidate sets (``frequency_scale="count"``) or as the
fraction of all candidate sets (``"fraction"``, the default). The two differ
only in how ``alpha`` trades the relevance term against ``1 / (W + alpha)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._validation import (
    check_nonnegative,
    check_permutation,
    check_rng,
    check_scores,
    check_weights,
)

POLICY_KINDS = ("deterministic", "randomized", "scaled_pl", "inverse_weighted", "plicfw")
FREQUENCY_SCALES = ("fraction", "count")

_ALIASES = {
    "det": "deterministic",
    "random": "randomized",
    "scaledpl": "scaled_pl",
    "scaled-pl": "scaled_pl",
    "inverse": "inverse_weighted",
    "inverse-weighted": "inverse_weighted",
    "pl-icfw": "plicfw",
    "pl_icfw": "plicfw",
    "icfw": "plicfw",
}


@dataclass(frozen=True)
class RankingPolicy:
    """One of the five ranking policies with its hyperparameters.

    ``c`` is only meaningful for ``scaled_pl``; ``alpha`` and ``beta`` only
    for ``plicfw``; ``frequency_scale`` only for the frequency-weighted
    policies.
    """

    kind: str
    c: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    frequency_scale: str = "fraction"

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {POLICY_KINDS}")
        object.__setattr__(self, "kind", kind)
        for name in ("c", "alpha", "beta"):
            object.__setattr__(self, name, check_nonnegative(getattr(self, name), name))
        if self.frequency_scale not in FREQUENCY_SCALES:
            raise ValueError(f"frequency_scale must be one of {FREQUENCY_SCALES}")

    @classmethod
    def deterministic(cls):
        return cls("deterministic")

    @classmethod
    def randomized(cls):
        return cls("randomized")

    @classmethod
    def scaled_pl(cls, c):
        return cls("scaled_pl", c=c)

    @classmethod
    def inverse_weighted(cls):
        return cls("inverse_weighted")

    @classmethod
    def plicfw(cls, alpha, beta, frequency_scale="fraction"):
        return cls("plicfw", alpha=alpha, beta=beta, frequency_scale=frequency_scale)

    @property
    def stochastic(self):
        return self.kind != "deterministic"

    @property
    def uses_frequencies(self):
        return self.kind in ("inverse_weighted", "plicfw")

    @property
    def normalizes_frequencies(self):
        return self.uses_frequencies and self.frequency_scale == "fraction"

    def __str__(self):
        if self.kind == "scaled_pl":
            return f"scaled_pl(c={self.c:g})"
        if self.kind == "plicfw":
            scale = ", count" if self.frequency_scale == "count" else ""
            return f"plicfw(alpha={self.alpha:g}, beta={self.beta:g}{scale})"
        return self.kind


def deterministic_rank(scores) -> np.ndarray:
    """Indices of ``scores`` in non-increasing order; ties keep input order.

    >>> deterministic_rank([0.2, 0.9, 0.5]).tolist()
    [1, 2, 0]
    """
    s = check_scores(scores)
    return np.argsort(-s, kind="stable")


def scaled_pl_log_weights(scores, c):
    return c * np.asarray(scores, dtype=float)


def scaled_pl_weights(scores, c) -> np.ndarray:
    """Weights ``exp(c * r)``, shifted so the largest is 1.

    The shift does not change the Plackett-Luce distribution.
    """
    s = check_scores(scores)
    c = check_nonnegative(c, "c")
    z = scaled_pl_log_weights(s, c)
    return np.exp(z - z.max())


def icfw_log_weights(scores, freqs, alpha, beta):
    """Log of ``alpha * exp(beta * r) + 1 / (W + alpha)``, elementwise.

    Broadcasts over arrays of any shape. Computed with ``logaddexp`` so no
    intermediate term overflows.
    """
    r = np.asarray(scores, dtype=float)
    W = np.asarray(freqs, dtype=float)
    if alpha == 0:
        if np.any(W <= 0):
            raise ValueError("alpha = 0 requires every candidate frequency W >= 1")
        # the exponential term vanishes identically
        return -np.log(W)
    if np.any(W < 0):
        raise ValueError("candidate frequencies must be non-negative")
    return np.logaddexp(math.log(alpha) + beta * r, -np.log(W + alpha))


def icfw_weights(scores, freqs, alpha, beta) -> np.ndarray:
    """Inverse-candidate-frequency Plackett-Luce weights, unshifted.

    ``alpha = beta = 0`` gives exactly ``1 / W``.

    >>> icfw_weights([0.0, 0.0], [2, 5], 0, 0).tolist()
    [0.5, 0.2]
    >>> float(icfw_weights([0.0], [1], 1, 1)[0])
    1.5
    """
    r = check_scores(scores)
    W = check_scores(freqs, name="freqs")
    if W.shape != r.shape:
        raise ValueError("scores and freqs must have the same length")
    alpha = check_nonnegative(alpha, "alpha")
    beta = check_nonnegative(beta, "beta")
    if alpha == 0:
        if np.any(W <= 0):
            raise ValueError("alpha = 0 requires every candidate frequency W >= 1")
        return 1.0 / W
    logw = icfw_log_weights(r, W, alpha, beta)
    if np.any(logw > 709.0):
        raise ValueError(
            "weights overflow float64; use icfw_log_weights for the shifted form"
        )
    return alpha * np.exp(beta * r) + 1.0 / (W + alpha)


def _uniform_open(rng, shape):
    u = rng.random(shape)
    # Generator.random is on [0, 1); exclude 0 so log(u) stays finite
    return np.maximum(u, np.finfo(float).tiny)


def sample_rankings_log(log_weights, rng, cutoff=None) -> np.ndarray:
    """Draw one Plackett-Luce ranking per row of ``log_weights``.

    Row ``i`` of the result lists column indices, most prominent first. With
    ``cutoff`` only the first ``cutoff`` positions are returned, which is
    the viewed prefix and is distributed as the full ranking truncated.

    The key ``u ** (1 / w)`` is replaced by ``log(w) - log(-log(u))``, a
    strictly increasing function of it, so the resulting order is the same.
    """
    lw = np.atleast_2d(np.asarray(log_weights, dtype=float))
    if not np.all(np.isfinite(lw)):
        raise ValueError("log weights must be finite")
    rng = check_rng(rng)
    keys = lw - np.log(-np.log(_uniform_open(rng, lw.shape)))
    k = lw.shape[1]
    if cutoff is None or cutoff >= k:
        return np.argsort(-keys, axis=1)
    if cutoff <= 0:
        return np.empty((lw.shape[0], 0), dtype=np.intp)
    part = np.argpartition(-keys, cutoff - 1, axis=1)[:, :cutoff]
    inner = np.argsort(-np.take_along_axis(keys, part, axis=1), axis=1)
    return np.take_along_axis(part, inner, axis=1)


def sample_ranking(weights, rng) -> np.ndarray:
    """Sample one permutation from the Plackett-Luce distribution of ``weights``.

    ``rng`` is a ``numpy.random.Generator`` (or a seed). Runs in O(N log N).
    """
    w = check_weights(weights)
    return sample_rankings_log(np.log(w)[None, :], rng)[0]


def exact_pl_probability(weights, ranking) -> float:
    """Exact probability of ``ranking`` under Plackett-Luce with ``weights``.

    At each position the chosen item's weight is divided by the total weight
    of the items not yet placed.

    >>> exact_pl_probability([2, 1, 1], [0, 1, 2])
    0.25
    """
    w = check_weights(weights)
    order = check_permutation(ranking, w.size)
    ordered = w[order]
    remaining = np.cumsum(ordered[::-1])[::-1]
    return float(np.prod(ordered / remaining))


def exact_pl_distribution(weights) -> dict:
    """Map every permutation (as a tuple) to its exact probability.

    Enumerates ``n!`` rankings; meant for ``n <= 8``.
    """
    w = check_weights(weights)
    if w.size > 8:
        raise ValueError("exact enumeration is limited to 8 items")
    return {
        perm: exact_pl_probability(w, perm) for perm in itertools.permutations(range(w.size))
    }


def policy_frequencies(policy: RankingPolicy, table, n_items, groups=False):
    """Dense frequency vector over item ids in the scale ``policy`` expects.

    ``None`` for policies that ignore frequencies.
    """
    if not policy.uses_frequencies:
        return None
    return table.to_array(n_items, groups=groups, normalize=policy.normalizes_frequencies)


def policy_log_weights(policy: RankingPolicy, scores, freqs=None):
    """Log sampling weights of a stochastic policy (any array shape).

    ``freqs`` must already be in the policy's frequency scale. Returns
    ``None`` for the deterministic policy.
    """
    scores = np.asarray(scores, dtype=float)
    if policy.kind == "deterministic":
        return None
    if policy.kind == "randomized":
        return np.zeros_like(scores)
    if policy.kind == "scaled_pl":
        return scaled_pl_log_weights(scores, policy.c)
    if freqs is None:
        raise ValueError(f"policy {policy} needs candidate frequencies")
    if policy.kind == "inverse_weighted":
        return icfw_log_weights(scores, freqs, 0.0, 0.0)
    return icfw_log_weights(scores, freqs, policy.alpha, policy.beta)


def rank_with_policy(policy: RankingPolicy, candidate_set, freqs=None, rng=None,
                     groups=False) -> np.ndarray:
    """Rank one candidate set under ``policy``.

    Returns positions into ``candidate_set.items``, most prominent first.
    ``freqs`` is a :class:`~plicfw.frequency.FrequencyTable` and is only
    consulted by the frequency-weighted policies; with ``groups=True`` the
    group totals replace the per-item counts.
    """
    scores = check_scores(candidate_set.scores)
    if policy.kind == "deterministic":
        return deterministic_rank(scores)
    W = None
    if policy.uses_frequencies:
        if freqs is None:
            raise ValueError(f"policy {policy} needs a frequency table")
        W = freqs.lookup(candidate_set.items, groups=groups,
                         normalize=policy.normalizes_frequencies)
    logw = policy_log_weights(policy, scores, W)
    return sample_rankings_log(logw[None, :], rng)[0]
