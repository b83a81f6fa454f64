"""Synthetic two-stage universe: imbalanced candidate sets and relevance.

A handful of "popular" items get a large candidate score and therefore land
in most candidate sets, while their relevance is low. Candidate sets are
drawn by sequential weighted sampling without replacement, which is exactly
the first ``k`` positions of a Plackett-Luce ranking over candidate scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from ._validation import check_rng, check_scores
from .candidates import CandidateBatch
from .exceptions import ConfigError
from .ranking import sample_rankings_log


@dataclass(frozen=True)
class ExperimentConfig:
    """Size and generation parameters of one simulated universe."""

    n_users: int = 2000
    m_items: int = 1000
    k: int = 40
    ell: int = 10
    n_popular: int = 10
    popular_score: float = 5.0
    beta_params: tuple = (1.0, 10.0)
    seed: int = 0

    def __post_init__(self):
        for name in ("n_users", "m_items", "k", "ell"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.n_popular < 0:
            raise ConfigError("n_popular must be >= 0")
        if not self.ell <= self.k <= self.m_items:
            raise ConfigError(
                f"need ell <= k <= m_items, got ell={self.ell}, k={self.k}, m={self.m_items}"
            )
        if self.n_popular > self.m_items:
            raise ConfigError("n_popular cannot exceed m_items")
        if self.popular_score <= 0:
            raise ConfigError("popular_score must be positive")
        a, b = self.beta_params
        if a <= 0 or b <= 0:
            raise ConfigError("beta_params must be positive")
        object.__setattr__(self, "beta_params", (float(a), float(b)))

    @classmethod
    def synthetic(cls, **overrides):
        return cls(**overrides)

    @classmethod
    def german(cls, **overrides):
        return cls(**{"n_users": 2000, "m_items": 200, "k": 15, "ell": 5, **overrides})

    def with_(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Universe:
    """Everything a policy run needs, fixed per seed.

    ``relevance`` is what the ranker sees; ``truth`` is what content
    quality is scored against (they coincide for synthetic data).
    """

    config: ExperimentConfig
    candidate_scores: np.ndarray
    relevance: np.ndarray
    truth: np.ndarray
    candidates: CandidateBatch
    boosted: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict, repr=False)


def gen_candidate_scores(config: ExperimentConfig, rng, boosted=None) -> np.ndarray:
    """Candidate scores: ``popular_score`` for boosted items, Beta draws elsewhere.

    ``boosted`` lists the item ids to boost and defaults to the first
    ``n_popular`` ids.
    """
    rng = check_rng(rng)
    m = config.m_items
    if boosted is None:
        boosted = np.arange(config.n_popular)
    boosted = np.asarray(boosted, dtype=np.intp)
    if boosted.size != config.n_popular or np.unique(boosted).size != boosted.size:
        raise ValueError(f"need {config.n_popular} distinct boosted items, got {boosted.size}")
    mask = np.zeros(m, dtype=bool)
    mask[boosted] = True
    scores = np.empty(m)
    a, b = config.beta_params
    scores[~mask] = rng.beta(a, b, size=m - boosted.size)
    scores[mask] = config.popular_score
    # Beta draws can round to exactly 0 at float precision; sampling needs > 0
    np.maximum(scores, np.finfo(float).tiny, out=scores)
    return scores


def sample_candidate_sets(candidate_scores, k, n_sets, rng) -> np.ndarray:
    """``n_sets`` independent candidate sets as an ``(n_sets, k)`` id matrix.

    Each row is built by sequentially drawing items without replacement with
    probability proportional to the remaining candidate scores.
    """
    c = check_scores(candidate_scores, name="candidate_scores")
    if np.any(c <= 0):
        raise ValueError("candidate scores must be positive")
    if not 1 <= k <= c.size:
        raise ValueError(f"k must be in [1, {c.size}], got {k}")
    logc = np.broadcast_to(np.log(c), (n_sets, c.size))
    return sample_rankings_log(logc, rng, cutoff=k)


def sample_candidate_set(candidate_scores, k, rng) -> np.ndarray:
    """One candidate set of ``k`` distinct item ids, in draw order."""
    return sample_candidate_sets(candidate_scores, k, 1, rng)[0]


def gen_relevance_synthetic(candidate_scores, rng, noise=None) -> np.ndarray:
    """Relevance ``max(0, 5 - c + x)`` with ``x`` standard normal per item.

    Pass ``noise`` to fix ``x`` instead of drawing it.

    >>> gen_relevance_synthetic([5.0, 0.1], None, noise=[0.0, 0.0]).tolist()
    [0.0, 4.9]
    """
    c = check_scores(candidate_scores, name="candidate_scores")
    x = check_rng(rng).standard_normal(c.size) if noise is None else np.asarray(noise, float)
    return np.maximum(0.0, 5.0 - c + x)


def build_synthetic_universe(config: ExperimentConfig, item_scores=None) -> Universe:
    """Generate the full synthetic universe for ``config.seed``.

    ``item_scores`` optionally replaces the relevance the rankers see (the
    ground truth used for content quality is unchanged).
    """
    ss = np.random.SeedSequence(config.seed)
    score_ss, rel_ss, set_ss = ss.spawn(3)
    cand = gen_candidate_scores(config, np.random.default_rng(score_ss))
    truth = gen_relevance_synthetic(cand, np.random.default_rng(rel_ss))
    relevance = truth if item_scores is None else check_scores(item_scores, "item_scores")
    if relevance.size != config.m_items:
        raise ValueError(f"item_scores has {relevance.size} entries, expected {config.m_items}")
    items = sample_candidate_sets(cand, config.k, config.n_users, np.random.default_rng(set_ss))
    return Universe(
        config=config,
        candidate_scores=cand,
        relevance=relevance,
        truth=truth,
        candidates=CandidateBatch.from_item_scores(items, relevance),
        boosted=np.arange(config.n_popular),
    )
