"""Candidate-appearance counts across a batch of candidate sets.

The count for an item is the number of candidate sets it appears in. It is
computed once over the whole batch before any ranking is drawn.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

from .candidates import CandidateBatch, CandidateSet


@dataclass(frozen=True)
class FrequencyTable:
    """Per-item appearance counts, optionally with per-group totals.

    Items that appear in no candidate set are absent rather than stored
    with count zero. ``n_sets`` is the number of candidate sets counted;
    ``normalize=True`` in the accessors divides by it, giving the fraction
    of sets an item appears in.
    """

    counts: Mapping[Hashable, int]
    n_sets: int = 0
    group_counts: Mapping[Hashable, int] | None = None
    group_of: Mapping[Hashable, Hashable] | None = field(default=None, repr=False)

    @property
    def total(self):
        return sum(self.counts.values())

    def __len__(self):
        return len(self.counts)

    def lookup(self, items: Iterable[Hashable], groups=False, normalize=False) -> np.ndarray:
        """Counts for ``items``; group totals ``W_g(v)`` when ``groups`` is set."""
        if normalize:
            if self.n_sets <= 0:
                raise ValueError("cannot normalize a table built from zero candidate sets")
            return self.lookup(items, groups) / self.n_sets
        if groups:
            if self.group_counts is None:
                raise ValueError("table has no group counts; call group_frequencies first")
            try:
                return np.array(
                    [self.group_counts[self.group_of[v]] for v in items], dtype=float
                )
            except KeyError as exc:
                raise ValueError(f"no group count for item {exc.args[0]!r}") from None
        try:
            return np.array([self.counts[v] for v in items], dtype=float)
        except KeyError as exc:
            raise ValueError(f"item {exc.args[0]!r} is not in the frequency table") from None

    def to_array(self, n_items, groups=False, normalize=False) -> np.ndarray:
        """Dense count vector over integer item ids ``0..n_items-1``.

        Ids missing from the table get 0.
        """
        out = np.zeros(n_items, dtype=float)
        keys = [
            v for v in self.counts if isinstance(v, (int, np.integer)) and 0 <= v < n_items
        ]
        if keys:
            out[keys] = self.lookup(keys, groups=groups, normalize=normalize)
        return out


def candidate_frequencies(candidate_sets) -> FrequencyTable:
    """Count, for each item, the number of candidate sets containing it.

    ``candidate_sets`` may be a :class:`CandidateBatch`, or any iterable of
    :class:`CandidateSet` or of plain item collections.

    >>> candidate_frequencies([{"A", "B"}, {"B", "C"}]).counts == {"A": 1, "B": 2, "C": 1}
    True
    """
    if isinstance(candidate_sets, CandidateBatch):
        # validated distinct per row on construction
        ids, cnt = np.unique(candidate_sets.items, return_counts=True)
        return FrequencyTable({int(v): int(c) for v, c in zip(ids, cnt)}, candidate_sets.n_users)

    counts: Counter = Counter()
    i = -1
    for i, s in enumerate(candidate_sets):
        items = s.items if isinstance(s, CandidateSet) else list(s)
        if len(set(items)) != len(items):
            raise ValueError(f"candidate set {i} contains a duplicate item")
        counts.update(items)
    return FrequencyTable(dict(counts), i + 1)


def group_frequencies(table: FrequencyTable, group_of) -> FrequencyTable:
    """Attach group totals: each group's count is the sum over its members.

    ``group_of`` maps item -> group, either a mapping or a callable.
    """
    lookup = group_of if callable(group_of) else group_of.__getitem__
    membership = {}
    for v in table.counts:
        try:
            membership[v] = lookup(v)
        except (KeyError, IndexError):
            raise ValueError(f"item {v!r} has no group") from None
    group_counts: Counter = Counter()
    for v, c in table.counts.items():
        group_counts[membership[v]] += c
    return FrequencyTable(dict(table.counts), table.n_sets, dict(group_counts), membership)
