"""Containers for stage-one candidate sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class CandidateSet:
    """Candidates returned for one user, with their relevance scores.

    ``items`` and ``scores`` are parallel; the order of ``items`` is the
    order stage one produced them in and carries no meaning for ranking.
    """

    user: Hashable
    items: tuple
    scores: np.ndarray = field(repr=False)

    def __post_init__(self):
        items = tuple(self.items)
        scores = np.asarray(self.scores, dtype=float)
        if scores.shape != (len(items),):
            raise ValueError(
                f"user {self.user!r}: {len(items)} items but scores of shape {scores.shape}"
            )
        if len(set(items)) != len(items):
            raise ValueError(f"user {self.user!r}: duplicate item in candidate set")
        if not np.all(np.isfinite(scores)):
            raise ValueError(f"user {self.user!r}: scores must be finite")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "scores", scores)

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class CandidateBatch:
    """All users' candidate sets in matrix form.

    Row ``u`` of ``items`` holds the integer item ids of user ``u``'s set and
    the same row of ``scores`` their relevance. Every set has size ``k``.
    """

    items: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        items = np.asarray(self.items)
        scores = np.asarray(self.scores, dtype=float)
        if items.ndim != 2 or not np.issubdtype(items.dtype, np.integer):
            raise ValueError("items must be a 2-D integer array (n_users, k)")
        if scores.shape != items.shape:
            raise ValueError(f"scores shape {scores.shape} != items shape {items.shape}")
        if items.size and items.min() < 0:
            raise ValueError("item ids must be non-negative integers")
        srt = np.sort(items, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            bad = int(np.nonzero(np.any(srt[:, 1:] == srt[:, :-1], axis=1))[0][0])
            raise ValueError(f"user {bad}: duplicate item in candidate set")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_item_scores(cls, items, item_scores):
        """Build a batch whose per-set scores are a per-item lookup."""
        items = np.asarray(items)
        return cls(items, np.asarray(item_scores, dtype=float)[items])

    @classmethod
    def from_sets(cls, sets: Sequence[CandidateSet]):
        sizes = {len(s) for s in sets}
        if len(sizes) != 1:
            raise ValueError("all candidate sets must have the same size")
        return cls(
            np.array([s.items for s in sets], dtype=np.int64),
            np.array([s.scores for s in sets], dtype=float),
        )

    @property
    def n_users(self):
        return self.items.shape[0]

    @property
    def k(self):
        return self.items.shape[1]

    def __len__(self):
        return self.n_users

    def __getitem__(self, u) -> CandidateSet:
        return CandidateSet(u, tuple(int(v) for v in self.items[u]), self.scores[u])

    def __iter__(self) -> Iterator[CandidateSet]:
        for u in range(self.n_users):
            yield self[u]
