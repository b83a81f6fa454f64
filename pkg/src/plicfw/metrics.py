"""System-level exposure and consumer-side quality metrics.

Exposure follows a top-``ell`` view model: each user sees the first ``ell``
entries of their ranking, and every seen slot is one impression.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_rng
from .candidates import CandidateBatch
from .exceptions import CapacityError, UndefinedMetricError
from .ranking import RankingPolicy, deterministic_rank, policy_log_weights, sample_rankings_log


@dataclass(frozen=True)
class ImpressionLedger:
    """Impression counts per item id (``counts[v]`` for item ``v``).

    ``labels`` optionally names the items for display.
    """

    counts: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 1 or np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValueError("counts must be a 1-D array of finite non-negative values")
        if self.labels is not None and len(self.labels) != counts.size:
            raise ValueError("labels must match counts")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self):
        return float(self.counts.sum())

    def as_dict(self):
        keys = self.labels if self.labels is not None else range(self.counts.size)
        return dict(zip(keys, self.counts.tolist()))


def _padded_counts(ledger, m_items):
    counts = ledger.counts
    if m_items is None:
        return counts
    if m_items < counts.size:
        raise ValueError(f"m_items={m_items} is smaller than the ledger ({counts.size} items)")
    return np.concatenate([counts, np.zeros(m_items - counts.size)])


def t1ps(ledger: ImpressionLedger, m_items=None) -> float:
    """Percent of all impressions held by the top 1% of items.

    The top group has ``ceil(0.01 * m_items)`` items; ``m_items`` defaults
    to the ledger length, and items missing from the ledger count as zero.
    """
    counts = _padded_counts(ledger, m_items)
    total = counts.sum()
    if total <= 0:
        raise UndefinedMetricError("T1PS is undefined with zero impressions")
    top = math.ceil(0.01 * counts.size)
    return float(100.0 * np.sort(counts)[::-1][:top].sum() / total)


def gini(ledger: ImpressionLedger, m_items=None) -> float:
    """Gini coefficient of impressions over all items, zeros included."""
    x = np.sort(_padded_counts(ledger, m_items))
    total = x.sum()
    if total <= 0:
        raise UndefinedMetricError("Gini is undefined with zero impressions")
    n = x.size
    ranks = np.arange(1, n + 1)
    return float(2.0 * np.dot(ranks, x) / (n * total) - (n + 1) / n)


def content_quality(viewed, truth, n_users) -> float:
    """Total ground-truth relevance of every viewed slot, per requesting user.

    ``viewed`` is an iterable of viewed prefixes (item ids) or an
    ``(n_users, ell)`` id array; ``truth`` maps item id -> relevance.
    """
    if n_users <= 0:
        raise ValueError("n_users must be positive")
    if isinstance(viewed, np.ndarray) and isinstance(truth, np.ndarray):
        if viewed.size == 0:
            return 0.0
        if viewed.min() < 0 or viewed.max() >= truth.size:
            raise ValueError("viewed item without a ground-truth value")
        return float(truth[viewed].sum() / n_users)
    total = 0.0
    for prefix in viewed:
        for v in prefix:
            try:
                total += truth[v]
            except (KeyError, IndexError):
                raise ValueError(f"no ground-truth value for item {v!r}") from None
    return total / n_users


def viewed_prefixes(policy: RankingPolicy, batch: CandidateBatch, ell, freqs=None, rng=None):
    """Item ids each user sees: the first ``min(ell, k)`` ranked candidates.

    ``freqs`` is a per-item count vector indexed by item id (or ``None`` for
    policies that ignore frequencies). Returns an ``(n_users, ell)`` array.
    """
    ell = min(ell, batch.k)
    if policy.kind == "deterministic":
        # stable sort by descending score within every row
        pos = np.argsort(-batch.scores, axis=1, kind="stable")[:, :ell]
    else:
        W = None if freqs is None else np.asarray(freqs, dtype=float)[batch.items]
        logw = policy_log_weights(policy, batch.scores, W)
        pos = sample_rankings_log(logw, rng, cutoff=ell)
    return np.take_along_axis(batch.items, pos, axis=1)


def impressions(viewed, m_items) -> np.ndarray:
    return np.bincount(np.asarray(viewed).ravel(), minlength=m_items).astype(float)


def expected_impressions(policy: RankingPolicy, batch: CandidateBatch, ell, freqs=None,
                         n_trials=1, rng=None, m_items=None, labels=None) -> ImpressionLedger:
    """Monte Carlo mean of per-item impressions over ``n_trials`` full passes.

    Each pass ranks every user's candidate set once. The deterministic
    policy is evaluated once regardless of ``n_trials``.
    """
    m = int(batch.items.max()) + 1 if m_items is None else m_items
    if not policy.stochastic:
        return ImpressionLedger(impressions(viewed_prefixes(policy, batch, ell), m), labels)
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = check_rng(rng)
    acc = np.zeros(m)
    # stack several passes into one batch; rows are independent draws
    per_chunk = max(1, 2_000_000 // batch.items.size)
    done = 0
    while done < n_trials:
        reps = min(per_chunk, n_trials - done)
        stacked = CandidateBatch(np.tile(batch.items, (reps, 1)), np.tile(batch.scores, (reps, 1)))
        acc += impressions(viewed_prefixes(policy, stacked, ell, freqs, rng), m)
        done += reps
    return ImpressionLedger(acc / n_trials, labels)


def randomized_expected_impressions(batch: CandidateBatch, ell, m_items=None,
                                    labels=None) -> ImpressionLedger:
    """Closed form under uniform ranking: an item in ``s`` sets gets ``s * ell / k``."""
    m = int(batch.items.max()) + 1 if m_items is None else m_items
    s = np.bincount(batch.items.ravel(), minlength=m)
    return ImpressionLedger(s * min(ell, batch.k) / batch.k, labels)


def _feasibility_search(sets, k, producers):
    n = len(sets)
    P = len(producers)
    index = {p: i for i, p in enumerate(producers)}
    if (n * k) % P:
        return None
    target = n * k // P
    choices = [[tuple(index[p] for p in combo) for combo in itertools.combinations(s, k)]
               for s in sets]
    # producers that still have a chance to appear after consumer i
    later = [[0] * P for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        later[i] = list(later[i + 1])
        for p in sets[i]:
            later[i][index[p]] += 1
    exposure = [0] * P
    picked = []

    def dfs(i):
        if i == n:
            return all(e == target for e in exposure)
        for combo in choices[i]:
            for j in combo:
                exposure[j] += 1
            remaining = later[i + 1]
            if all(exposure[j] <= target and exposure[j] + remaining[j] >= target
                   for j in range(P)):
                picked.append(combo)
                if dfs(i + 1):
                    return True
                picked.pop()
            for j in combo:
                exposure[j] -= 1
        return False

    if not dfs(0):
        return None
    return [tuple(producers[j] for j in combo) for combo in picked]


def equal_exposure_feasible(candidate_sets: Sequence, k, producers=None,
                            max_combinations=10**7):
    """Decide whether some k-subset per consumer equalizes producer exposure.

    Under subset selection each consumer is shown ``k`` of their candidates
    and sees all of them. ``producers`` defaults to every item in some set.
    Returns ``(feasible, witness)``; ``witness`` lists the chosen subsets
    when feasible and is ``None`` otherwise.
    """
    sets = [tuple(s) for s in candidate_sets]
    if k < 0:
        raise ValueError("k must be >= 0")
    for i, s in enumerate(sets):
        if len(set(s)) != len(s):
            raise ValueError(f"candidate set {i} contains a duplicate item")
        if len(s) < k:
            raise ValueError(f"candidate set {i} has fewer than k={k} items")
    size = math.prod(math.comb(len(s), k) for s in sets)
    if size > max_combinations:
        raise CapacityError(f"{size} subset combinations exceed the limit of {max_combinations}")
    seen = sorted({p for s in sets for p in s}, key=repr)
    producers = seen if producers is None else list(producers)
    if not producers:
        return True, [() for _ in sets]
    if not set(seen) <= set(producers):
        raise ValueError("candidate sets mention producers outside `producers`")
    witness = _feasibility_search(sets, k, producers)
    return witness is not None, witness
