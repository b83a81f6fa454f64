"""Estimator-style front end to the ranking policies.

``fit`` learns candidate frequencies from a batch of candidate sets;
``predict`` ranks candidate sets. Hyperparameters follow the usual
``get_params``/``set_params`` contract so the ranker can be cloned and
grid-searched like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_rng
from .candidates import CandidateBatch, CandidateSet
from .frequency import candidate_frequencies, group_frequencies
from .metrics import viewed_prefixes
from .ranking import RankingPolicy, policy_frequencies, policy_log_weights, rank_with_policy


class PolicyRanker(BaseEstimator):
    """Re-rank candidate sets with one of the five policies.

    Parameters
    ----------
    policy : str
        ``"deterministic"``, ``"randomized"``, ``"scaled_pl"``,
        ``"inverse_weighted"`` or ``"plicfw"``.
    alpha, beta : float
        PL-ICFW hyperparameters.
    c : float
        Scaled Plackett-Luce multiplier.
    frequency_scale : {"fraction", "count"}
        Read candidate frequencies as the fraction of candidate sets an item
        appears in, or as the raw number of sets.
    group_of : mapping or callable, optional
        Item -> group. When given, group appearance totals replace per-item
        counts in the frequency weights.
    random_state : int, Generator or None
        Source of randomness for ``predict``. An int makes every call
        reproducible.

    Attributes
    ----------
    frequencies_ : FrequencyTable
    policy_ : RankingPolicy
    """

    def __init__(self, policy="plicfw", alpha=1.0, beta=1.0, c=1.0, frequency_scale="fraction",
                 group_of=None, random_state=None):
        self.policy = policy
        self.alpha = alpha
        self.beta = beta
        self.c = c
        self.frequency_scale = frequency_scale
        self.group_of = group_of
        self.random_state = random_state

    def _make_policy(self):
        kind = RankingPolicy(self.policy).kind
        if kind == "plicfw":
            return RankingPolicy.plicfw(self.alpha, self.beta, self.frequency_scale)
        if kind == "scaled_pl":
            return RankingPolicy.scaled_pl(self.c)
        return RankingPolicy(kind, frequency_scale=self.frequency_scale)

    def fit(self, X, y=None):
        """Count candidate-set appearances over ``X``.

        ``X`` is a :class:`CandidateBatch` or a sequence of
        :class:`CandidateSet`.
        """
        self.policy_ = self._make_policy()
        table = candidate_frequencies(X)
        if self.group_of is not None:
            table = group_frequencies(table, self.group_of)
        self.frequencies_ = table
        return self

    def sampling_weights(self, candidate_set: CandidateSet):
        """Relative PL weights for one set (max weight scaled to 1)."""
        check_is_fitted(self, "policy_")
        if not self.policy_.stochastic:
            raise ValueError("the deterministic policy has no sampling weights")
        W = None
        if self.policy_.uses_frequencies:
            W = self.frequencies_.lookup(candidate_set.items, groups=self.group_of is not None,
                                         normalize=self.policy_.normalizes_frequencies)
        logw = policy_log_weights(self.policy_, candidate_set.scores, W)
        return np.exp(logw - logw.max())

    def predict(self, X):
        """Rank each candidate set; returns item ids, most prominent first.

        For a :class:`CandidateBatch` the result is an ``(n_users, k)``
        array, otherwise a list of tuples.
        """
        check_is_fitted(self, "policy_")
        rng = check_rng(self.random_state)
        groups = self.group_of is not None
        if isinstance(X, CandidateBatch) and all(
            isinstance(v, (int, np.integer)) for v in self.frequencies_.counts
        ):
            return self.predict_viewed(X, X.k, rng=rng)
        return [
            tuple(s.items[i] for i in rank_with_policy(self.policy_, s, self.frequencies_,
                                                       rng, groups))
            for s in X
        ]

    def predict_viewed(self, X: CandidateBatch, ell, rng=None):
        """First ``ell`` ranked item ids per user, vectorized over the batch."""
        check_is_fitted(self, "policy_")
        rng = check_rng(self.random_state if rng is None else rng)
        freqs = policy_frequencies(self.policy_, self.frequencies_, int(X.items.max()) + 1,
                                   groups=self.group_of is not None)
        return viewed_prefixes(self.policy_, X, ell, freqs, rng)
