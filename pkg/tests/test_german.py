import numpy as np
import pandas as pd
import pytest
from sklearn.base import clone

from plicfw.exceptions import DataError, TrainingError
from plicfw.german import (
    N_FEATURES,
    GermanCreditEncoder,
    LogisticRelevanceModel,
    boosted_positions,
    build_german_universe,
    load_german,
    logistic_loss_grad,
    predict_relevance,
    preprocess,
    train_linear,
    write_universe_csv,
)
from plicfw.simgen import ExperimentConfig


@pytest.fixture(scope="module")
def records(german_path):
    return load_german(german_path)


@pytest.fixture(scope="module")
def features(records):
    return preprocess(records)


def test_load_counts(records):
    assert len(records) == 1000
    assert records["label"].sum() == 700
    assert (records["label"] == 0).sum() == 300


def test_truncated_file_rejected(german_path, tmp_path):
    lines = german_path.read_text().splitlines()
    short = tmp_path / "short.data"
    short.write_text("\n".join(lines[:999]) + "\n")
    with pytest.raises(DataError, match="1000"):
        load_german(short)


def test_wrong_field_count_names_line(german_path, tmp_path):
    lines = german_path.read_text().splitlines()
    lines[41] = " ".join(lines[41].split()[:-2])
    bad = tmp_path / "bad.data"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataError, match=":42:"):
        load_german(bad)


def test_feature_dimension(features):
    X, y = features
    assert N_FEATURES == 29
    assert X.shape == (1000, 29)
    assert y.shape == (1000,)


def test_numeric_columns_standardized(features):
    X, _ = features
    np.testing.assert_allclose(X[:, :3].mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(X[:, :3].std(axis=0), 1.0, atol=1e-9)


def test_one_hot_blocks(records, features):
    X, _ = features
    enc = GermanCreditEncoder().fit(records)
    names = enc.get_feature_names_out()
    assert len(names) == 29
    blocks = {}
    for j, name in enumerate(names[3:], start=3):
        blocks.setdefault(name.split("=")[0], []).append(j)
    assert {k: len(v) for k, v in blocks.items()} == {
        "sex": 2, "job": 4, "housing": 3, "savings": 5, "checking": 4, "purpose": 8,
    }
    for cols in blocks.values():
        assert np.all(X[:, cols].sum(axis=1) == 1.0)
        assert set(np.unique(X[:, cols])) <= {0.0, 1.0}


def test_unseen_category_code_rejected(records):
    enc = GermanCreditEncoder().fit(records)
    bad = records.head(3).copy()
    bad.loc[bad.index[1], "purpose"] = "A499"
    with pytest.raises(ValueError, match="A499"):
        enc.transform(bad)


def test_gradient_matches_central_differences(features):
    X, y = features
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(10):
        theta = rng.normal(0, 0.5, X.shape[1] + 1)
        _, g_coef, g_int = logistic_loss_grad(theta[:-1], theta[-1], X, y)
        analytic = np.append(g_coef, g_int)
        numeric = np.empty_like(theta)
        for j in range(theta.size):
            e = np.zeros_like(theta)
            e[j] = h
            up = logistic_loss_grad((theta + e)[:-1], (theta + e)[-1], X, y)[0]
            down = logistic_loss_grad((theta - e)[:-1], (theta - e)[-1], X, y)[0]
            numeric[j] = (up - down) / (2 * h)
        rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
        assert rel < 1e-5


@pytest.fixture(scope="module")
def model(features):
    X, y = features
    return train_linear(X, y, seed=0)


def test_training_beats_majority_rate(features, model):
    X, y = features
    majority = max(y.mean(), 1 - y.mean())
    assert majority == pytest.approx(0.70)
    assert (model.predict(X) == y).mean() > majority


def test_training_loss_non_increasing(model):
    assert np.all(np.diff(model.loss_curve_) <= 1e-15)
    assert len(model.loss_curve_) == 2001


def test_training_deterministic(features, model):
    X, y = features
    again = train_linear(X, y, seed=0)
    np.testing.assert_array_equal(again.coef_, model.coef_)


def test_separable_toy_reaches_full_accuracy():
    X = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    m = LogisticRelevanceModel(epochs=500, learning_rate=0.5).fit(X, y)
    assert (m.predict(X) == y).all()


def test_divergence_raises():
    X = np.array([[1e200], [-1e200]])
    with pytest.raises(TrainingError):
        LogisticRelevanceModel(epochs=5, learning_rate=1e10).fit(X, [1, 0])


def test_zero_model_predicts_half():
    m = LogisticRelevanceModel(epochs=0).fit(np.zeros((4, 29)), [0, 1, 0, 1])
    np.testing.assert_allclose(predict_relevance(m, np.random.default_rng(0).normal(size=(5, 29))),
                               0.5)


def test_relevance_bounded_and_monotone(features, model):
    X, _ = features
    p = predict_relevance(model, X)
    assert np.all((p > 0) & (p < 1))
    j = int(np.argmax(model.coef_))
    bumped = X.copy()
    bumped[:, j] += 1.0
    assert np.all(predict_relevance(model, bumped) > p)


def test_dimension_mismatch_rejected(model):
    with pytest.raises(ValueError):
        predict_relevance(model, np.zeros((2, 28)))


def test_estimators_clone():
    m = clone(LogisticRelevanceModel(epochs=10, learning_rate=0.2))
    assert m.get_params()["epochs"] == 10
    assert "mean_" not in vars(clone(GermanCreditEncoder()))


def test_boosted_ranks():
    rel = np.random.default_rng(0).permutation(200) / 200
    picked = boosted_positions(rel)
    ranks = np.argsort(np.argsort(rel)) + 1
    assert sorted(ranks[picked].tolist()) == list(range(51, 61))


def test_too_few_candidates_rejected():
    with pytest.raises(ValueError):
        boosted_positions(np.arange(59.0))


def test_universe_shape_and_boosting(german_setup):
    u, _ = german_setup
    cfg = u.config
    assert (cfg.m_items, cfg.n_users, cfg.k, cfg.ell) == (200, 2000, 15, 5)
    assert np.sum(u.candidate_scores == 5.0) == 10
    rel = u.meta["learned_relevance"]
    ranks = np.argsort(np.argsort(rel, kind="stable"), kind="stable") + 1
    assert set(ranks[u.boosted].tolist()) <= set(range(51, 61))
    assert np.all(rel[u.boosted] < np.median(rel))
    assert set(np.unique(u.truth)) <= {0.0, 1.0}
    assert u.candidates.items.shape == (2000, 15)


def test_pipeline_deterministic(german_path, german_setup):
    from plicfw.german import german_universe

    u, m = german_setup
    u2, m2 = german_universe(german_path, ExperimentConfig.german(seed=0))
    np.testing.assert_array_equal(m.coef_, m2.coef_)
    np.testing.assert_array_equal(u.candidates.items, u2.candidates.items)
    np.testing.assert_array_equal(u.meta["source_rows"], u2.meta["source_rows"])


def test_build_rejects_wrong_size():
    with pytest.raises(ValueError):
        build_german_universe(np.zeros(100), np.zeros(100), ExperimentConfig.german())


def test_universe_csv(german_setup, tmp_path):
    u, _ = german_setup
    out = tmp_path / "universe.csv"
    write_universe_csv(u, out)
    df = pd.read_csv(out)
    assert list(df.columns) == ["item_id", "source_row", "learned_relevance",
                                "ground_truth_label", "candidate_score", "boosted"]
    assert len(df) == 200
    assert df["boosted"].sum() == 10
