"""Plackett-Luce re-ranking with inverse candidate-frequency weights.

Simulates two-stage recommendation with imbalanced candidate sets and
measures the exposure-inequality / content-quality tradeoff of several
ranking policies.
"""

from .candidates import CandidateBatch, CandidateSet
from .estimator import PolicyRanker
from .exceptions import CapacityError, ConfigError, DataError, TrainingError, UndefinedMetricError
from .frequency import FrequencyTable, candidate_frequencies, group_frequencies
from .metrics import (
    ImpressionLedger,
    content_quality,
    equal_exposure_feasible,
    expected_impressions,
    gini,
    randomized_expected_impressions,
    t1ps,
)
from .ranking import (
    RankingPolicy,
    deterministic_rank,
    exact_pl_probability,
    icfw_weights,
    rank_with_policy,
    sample_ranking,
    scaled_pl_weights,
)
from .simgen import ExperimentConfig, Universe, build_synthetic_universe

__version__ = "0.1.0"

__all__ = [
    "CandidateBatch",
    "CandidateSet",
    "CapacityError",
    "ConfigError",
    "DataError",
    "ExperimentConfig",
    "FrequencyTable",
    "ImpressionLedger",
    "PolicyRanker",
    "RankingPolicy",
    "TrainingError",
    "UndefinedMetricError",
    "Universe",
    "build_synthetic_universe",
    "candidate_frequencies",
    "content_quality",
    "deterministic_rank",
    "equal_exposure_feasible",
    "exact_pl_probability",
    "expected_impressions",
    "gini",
    "group_frequencies",
    "icfw_weights",
    "randomized_expected_impressions",
    "rank_with_policy",
    "sample_ranking",
    "scaled_pl_weights",
    "t1ps",
]
