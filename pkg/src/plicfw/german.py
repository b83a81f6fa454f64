"""German credit relevance pipeline and candidate universe.

Raw UCI records are encoded into 29 features (3 standardized numerics plus
one-hot blocks for sex, job, housing, savings, checking account and loan
purpose), a logistic regression is fit by full-batch gradient descent, and
its predicted probabilities serve as relevance scores. A subset of 200
applicants becomes the candidate pool; ten low-relevance applicants are
boosted so that they crowd the candidate sets.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .candidates import CandidateBatch
from .exceptions import DataError, TrainingError
from .simgen import ExperimentConfig, Universe, gen_candidate_scores, sample_candidate_sets

GERMAN_COLUMNS = [
    "checking_account",
    "duration",
    "credit_history",
    "purpose",
    "credit_amount",
    "savings",
    "employment_since",
    "installment_rate",
    "status_and_sex",
    "other_debtors",
    "residence_since",
    "property",
    "age",
    "installment_plans",
    "housing",
    "existing_credits",
    "job",
    "num_liable",
    "telephone",
    "foreign_worker",
    "credit_risk",
]

NUMERIC_FEATURES = ["age", "credit_amount", "duration"]

# raw code -> category; several raw codes share a category for sex and purpose
CATEGORY_MAPS = {
    "sex": ("status_and_sex", {
        "A91": "male", "A93": "male", "A94": "male",
        "A92": "female", "A95": "female",
    }),
    "job": ("job", {
        "A171": "unskilled_nonresident", "A172": "unskilled_resident",
        "A173": "skilled", "A174": "highly_qualified",
    }),
    "housing": ("housing", {"A151": "rent", "A152": "own", "A153": "free"}),
    "savings": ("savings", {
        "A61": "little", "A62": "moderate", "A63": "quite_rich",
        "A64": "rich", "A65": "unknown",
    }),
    "checking": ("checking_account", {
        "A11": "little", "A12": "moderate", "A13": "rich", "A14": "none",
    }),
    "purpose": ("purpose", {
        "A40": "car", "A41": "car",
        "A42": "furniture_equipment", "A43": "radio_tv",
        "A44": "domestic_appliances", "A45": "repairs",
        "A46": "education", "A48": "education",
        "A47": "vacation_others", "A410": "vacation_others",
        "A49": "business",
    }),
}

N_FEATURES = len(NUMERIC_FEATURES) + sum(
    len(set(codes.values())) for _, codes in CATEGORY_MAPS.values()
)


def load_german(path, expected_rows=1000) -> pd.DataFrame:
    """Parse the space-separated UCI ``german.data`` file.

    Returns one row per applicant with the 20 raw attributes (numeric ones
    as ints), the raw ``credit_risk`` code and ``label`` (good=1, bad=0).
    """
    path = Path(path)
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 21:
                raise DataError(f"{path}:{lineno}: expected 21 fields, found {len(fields)}")
            if fields[-1] not in ("1", "2"):
                raise DataError(f"{path}:{lineno}: label must be 1 or 2, found {fields[-1]!r}")
            rows.append(fields)
    if expected_rows is not None and len(rows) != expected_rows:
        raise DataError(f"{path}: expected {expected_rows} records, found {len(rows)}")

    df = pd.DataFrame(rows, columns=GERMAN_COLUMNS)
    numeric = ["duration", "credit_amount", "installment_rate", "residence_since", "age",
               "existing_credits", "num_liable", "credit_risk"]
    for col in numeric:
        try:
            df[col] = df[col].astype(int)
        except ValueError:
            bad = next(i for i, v in enumerate(df[col]) if not v.lstrip("-").isdigit())
            raise DataError(f"{path}: record {bad + 1}: non-integer {col} {df[col][bad]!r}") from None
    df["label"] = (df["credit_risk"] == 1).astype(int)
    return df


class GermanCreditEncoder(TransformerMixin, BaseEstimator):
    """Encode raw German credit records into the 29-dimensional feature space.

    Numeric features are standardized with statistics from ``fit``; each
    categorical block is one-hot with a fixed category list, so every row
    has exactly one 1 per block.
    """

    def fit(self, X, y=None):
        num = X[NUMERIC_FEATURES].to_numpy(dtype=float)
        self.mean_ = num.mean(axis=0)
        self.scale_ = num.std(axis=0)
        self.scale_[self.scale_ == 0] = 1.0
        self.categories_ = {
            name: sorted(set(codes.values())) for name, (_, codes) in CATEGORY_MAPS.items()
        }
        self.n_features_out_ = N_FEATURES
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        blocks = [(X[NUMERIC_FEATURES].to_numpy(dtype=float) - self.mean_) / self.scale_]
        for name, (column, codes) in CATEGORY_MAPS.items():
            cats = self.categories_[name]
            block = np.zeros((len(X), len(cats)))
            for i, code in enumerate(X[column]):
                if code not in codes:
                    raise ValueError(f"unseen {column} category code {code!r}")
                block[i, cats.index(codes[code])] = 1.0
            blocks.append(block)
        return np.hstack(blocks)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "mean_")
        names = list(NUMERIC_FEATURES)
        for name, cats in self.categories_.items():
            names += [f"{name}={c}" for c in cats]
        return np.array(names, dtype=object)


def preprocess(records: pd.DataFrame):
    """Features and binary labels, standardized over the full sample."""
    X = GermanCreditEncoder().fit_transform(records)
    return X, records["label"].to_numpy(dtype=int)


def logistic_loss_grad(coef, intercept, X, y):
    """Mean cross-entropy of a logistic model and its gradient.

    Returns ``(loss, grad_coef, grad_intercept)``.
    """
    z = X @ coef + intercept
    # log(1 + exp(z)) - y z, written to avoid overflow
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    resid = expit(z) - y
    return loss, X.T @ resid / X.shape[0], float(resid.mean())


class LogisticRelevanceModel(ClassifierMixin, BaseEstimator):
    """Logistic regression fit by full-batch gradient descent.

    Parameters
    ----------
    epochs : int
        Number of gradient steps.
    learning_rate : float
        Step size.
    init_scale : float
        Standard deviation of the initial coefficients; 0 means zero init.
    random_state : int or None
        Seeds the initialization when ``init_scale > 0``.
    """

    def __init__(self, epochs=2000, learning_rate=0.1, init_scale=0.0, random_state=0):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.init_scale = init_scale
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.array([0, 1])
        if not np.isin(y, self.classes_).all():
            raise ValueError("labels must be 0/1")
        rng = np.random.default_rng(self.random_state)
        coef = self.init_scale * rng.standard_normal(X.shape[1])
        intercept = 0.0
        losses = []
        # overflow shows up as a non-finite loss, which is reported below
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(self.epochs):
                loss, g_coef, g_int = logistic_loss_grad(coef, intercept, X, y)
                if not np.isfinite(loss):
                    raise TrainingError(f"loss became non-finite after {len(losses)} epochs")
                losses.append(loss)
                coef = coef - self.learning_rate * g_coef
                intercept -= self.learning_rate * g_int
            final, _, _ = logistic_loss_grad(coef, intercept, X, y)
        if not np.isfinite(final) or not np.all(np.isfinite(coef)):
            raise TrainingError("training diverged")
        losses.append(final)
        self.coef_ = coef
        self.intercept_ = intercept
        self.loss_curve_ = np.array(losses)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.coef_.size:
            raise ValueError(f"expected {self.coef_.size} features, got {X.shape[1]}")
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)


def train_linear(features, labels, epochs=2000, learning_rate=0.1, seed=0):
    return LogisticRelevanceModel(epochs, learning_rate, random_state=seed).fit(features, labels)


def predict_relevance(model: LogisticRelevanceModel, features) -> np.ndarray:
    """Predicted probability of good credit, used as relevance in (0, 1)."""
    return model.predict_proba(features)[:, 1]


def boosted_positions(relevance, first_rank=51, last_rank=60) -> np.ndarray:
    """Indices at ascending-relevance ranks ``first_rank..last_rank`` (1-indexed)."""
    relevance = np.asarray(relevance, dtype=float)
    if relevance.size < last_rank:
        raise ValueError(f"need at least {last_rank} candidates, got {relevance.size}")
    order = np.argsort(relevance, kind="stable")
    return np.sort(order[first_rank - 1:last_rank])


def build_german_universe(relevance, labels, config: ExperimentConfig, rng=None,
                          source_rows=None, item_scores=None) -> Universe:
    """Candidate universe over ``config.m_items`` selected applicants.

    ``relevance`` and ``labels`` are per selected applicant. The ten
    applicants at ascending-relevance ranks 51-60 receive the popular
    candidate score; everyone else draws from the Beta law.
    """
    relevance = np.asarray(relevance, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if relevance.size != config.m_items or labels.size != config.m_items:
        raise ValueError(f"expected {config.m_items} candidates, got {relevance.size}")
    boosted = boosted_positions(relevance, 51, 50 + config.n_popular)
    ss = np.random.SeedSequence(config.seed) if rng is None else None
    if ss is not None:
        score_rng, set_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    else:
        score_rng = set_rng = rng
    cand = gen_candidate_scores(config, score_rng, boosted=boosted)
    items = sample_candidate_sets(cand, config.k, config.n_users, set_rng)
    ranked_on = relevance if item_scores is None else np.asarray(item_scores, dtype=float)
    return Universe(
        config=config,
        candidate_scores=cand,
        relevance=ranked_on,
        truth=labels,
        candidates=CandidateBatch.from_item_scores(items, ranked_on),
        boosted=boosted,
        meta={
            "source_rows": None if source_rows is None else np.asarray(source_rows),
            "learned_relevance": relevance,
        },
    )


def german_universe(path, config: ExperimentConfig | None = None, epochs=2000,
                    learning_rate=0.1, item_scores=None):
    """Full pipeline: load, encode, train, select candidates, build universe.

    Returns ``(universe, model)``. Applicant selection and all universe
    randomness derive from ``config.seed``.
    """
    config = ExperimentConfig.german() if config is None else config
    records = load_german(path)
    X, y = preprocess(records)
    model = train_linear(X, y, epochs=epochs, learning_rate=learning_rate, seed=config.seed)
    rel_all = predict_relevance(model, X)
    select_ss, universe_ss = np.random.SeedSequence(config.seed).spawn(2)
    rows = np.sort(
        np.random.default_rng(select_ss).choice(len(records), config.m_items, replace=False)
    )
    score_rng = np.random.default_rng(universe_ss)
    universe = build_german_universe(
        rel_all[rows], y[rows], config, rng=score_rng, source_rows=rows, item_scores=item_scores
    )
    return universe, model


def write_universe_csv(universe: Universe, path):
    """Write one row per candidate item describing the German universe."""
    rows = universe.meta.get("source_rows")
    learned = universe.meta.get("learned_relevance", universe.relevance)
    boosted = np.zeros(universe.config.m_items, dtype=bool)
    boosted[universe.boosted] = True
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item_id", "source_row", "learned_relevance", "ground_truth_label",
                    "candidate_score", "boosted"])
        for v in range(universe.config.m_items):
            w.writerow([
                v,
                "" if rows is None else int(rows[v]),
                repr(float(learned[v])),
                int(universe.truth[v]),
                repr(float(universe.candidate_scores[v])),
                "true" if boosted[v] else "false",
            ])
