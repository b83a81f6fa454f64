import numpy as np
import pytest
from scipy import integrate, stats

from plicfw.exceptions import ConfigError
from plicfw.frequency import candidate_frequencies
from plicfw.simgen import (
    ExperimentConfig,
    build_synthetic_universe,
    gen_candidate_scores,
    gen_relevance_synthetic,
    sample_candidate_set,
    sample_candidate_sets,
)


def beta_1_10_cdf(x):
    return 1.0 - (1.0 - np.clip(x, 0.0, 1.0)) ** 10


def test_config_defaults():
    s = ExperimentConfig.synthetic()
    assert (s.n_users, s.m_items, s.k, s.ell, s.n_popular) == (2000, 1000, 40, 10, 10)
    g = ExperimentConfig.german()
    assert (g.n_users, g.m_items, g.k, g.ell) == (2000, 200, 15, 5)


@pytest.mark.parametrize("bad", [dict(ell=50), dict(k=2000), dict(n_popular=2000),
                                 dict(n_users=0), dict(beta_params=(0, 1))])
def test_config_rejects_invalid(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.synthetic(**bad)


def test_exactly_n_popular_boosted():
    c = gen_candidate_scores(ExperimentConfig.synthetic(), np.random.default_rng(0))
    assert np.sum(c == 5.0) == 10
    assert np.all(c[:10] == 5.0)


def test_beta_draws_match_law_across_seeds():
    cfg = ExperimentConfig.synthetic()
    for seed in range(5):
        c = gen_candidate_scores(cfg, np.random.default_rng(seed))[10:]
        assert c.size == 990
        assert abs(c.mean() - 1 / 11) < 0.01
        assert stats.kstest(c, beta_1_10_cdf).pvalue > 0.001


def test_no_popular_items_all_in_unit_interval():
    c = gen_candidate_scores(ExperimentConfig.synthetic(n_popular=0), np.random.default_rng(1))
    assert np.all((c > 0) & (c < 1))


def test_candidate_set_pair_probability():
    sets = sample_candidate_sets([1.0, 1.0, 2.0], 2, 100_000, np.random.default_rng(2))
    both = np.mean(np.isin(sets, [0, 1]).all(axis=1))
    assert abs(both - 1 / 6) < 0.005


def test_full_set_when_k_equals_m():
    s = sample_candidate_set([0.3, 1.0, 2.0, 0.1], 4, np.random.default_rng(0))
    assert sorted(s.tolist()) == [0, 1, 2, 3]


def test_k_too_large_rejected():
    with pytest.raises(ValueError):
        sample_candidate_set([1.0, 1.0], 3, 0)


def test_boosted_item_inclusion_far_above_uniform():
    rng = np.random.default_rng(3)
    c = np.concatenate([[5.0], rng.beta(1, 10, 999)])
    sets = sample_candidate_sets(c, 40, 5000, rng)
    rate = np.mean((sets == 0).any(axis=1))
    assert rate > 0.3 > 40 / 1000


@pytest.mark.parametrize("c, x, r", [(5.0, 0.0, 0.0), (0.1, 0.0, 4.9), (5.0, -1.0, 0.0)])
def test_relevance_formula(c, x, r):
    assert gen_relevance_synthetic([c], None, noise=[x])[0] == pytest.approx(r)


def test_universe_invariants(synthetic_universe):
    u = synthetic_universe
    items = u.candidates.items
    assert items.shape == (2000, 40)
    assert all(len(set(row)) == 40 for row in items.tolist())
    assert u.boosted.tolist() == list(range(10))


def population_correlation(n_popular=10, m=1000, popular=5.0):
    """corr(c, max(0, 5 - c + x)) for c drawn from the synthetic mixture."""
    def moments(c):
        mu = 5.0 - c
        cdf, pdf = stats.norm.cdf(mu), stats.norm.pdf(mu)
        er = mu * cdf + pdf
        er2 = (mu * mu + 1.0) * cdf + mu * pdf
        return np.array([c, c * c, er, er2, c * er])

    p = n_popular / m
    beta = stats.beta(1, 10)
    grid = [integrate.quad(lambda c, i=i: moments(c)[i] * beta.pdf(c), 0, 1)[0]
            for i in range(5)]
    ec, ec2, er, er2, ecr = (1 - p) * np.array(grid) + p * moments(popular)
    return (ecr - ec * er) / np.sqrt((ec2 - ec * ec) * (er2 - er * er))


def test_relevance_anticorrelated_with_candidate_score():
    rho = population_correlation()
    seen = [np.corrcoef(u.candidate_scores, u.truth)[0, 1]
            for u in (build_synthetic_universe(ExperimentConfig.synthetic(n_users=1, seed=s))
                      for s in range(40))]
    assert max(seen) < 0
    assert abs(np.mean(seen) - rho) < 0.02


def test_relevance_anticorrelation_below_minus_half(synthetic_universe):
    u = synthetic_universe
    assert np.corrcoef(u.candidate_scores, u.truth)[0, 1] < -0.5


def test_boosted_items_more_frequent_every_seed():
    for seed in range(3):
        u = build_synthetic_universe(ExperimentConfig.synthetic(seed=seed))
        W = candidate_frequencies(u.candidates).to_array(1000)
        assert W[:10].mean() > W[10:].mean()


def test_universe_reproducible():
    cfg = ExperimentConfig.synthetic(n_users=50, seed=7)
    a, b = build_synthetic_universe(cfg), build_synthetic_universe(cfg)
    np.testing.assert_array_equal(a.candidates.items, b.candidates.items)
    np.testing.assert_array_equal(a.truth, b.truth)
    c = build_synthetic_universe(cfg.with_(seed=8))
    assert not np.array_equal(a.candidates.items, c.candidates.items)


def test_external_item_scores_replace_ranked_relevance():
    cfg = ExperimentConfig.synthetic(n_users=20)
    scores = np.linspace(0, 1, 1000)
    u = build_synthetic_universe(cfg, item_scores=scores)
    np.testing.assert_array_equal(u.candidates.scores, scores[u.candidates.items])
    assert not np.array_equal(u.truth, scores)
