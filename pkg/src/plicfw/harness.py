"""Experiment runner: toy demo, single-policy runs and hyperparameter sweeps.

Randomness layout: the universe is drawn from ``SeedSequence(seed)``; the
rankings of trial ``t`` at grid point ``p`` come from a generator keyed by
``(seed, p, t)``, and user ``u`` always occupies row ``u`` of that draw.
Results therefore do not depend on how grid points are spread over worker
processes.
"""

from __future__ import annotations

import configparser
import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .candidates import CandidateBatch
from .exceptions import ConfigError
from .frequency import candidate_frequencies
from .metrics import (
    ImpressionLedger,
    content_quality,
    expected_impressions,
    gini,
    impressions,
    randomized_expected_impressions,
    t1ps,
    viewed_prefixes,
)
from .ranking import FREQUENCY_SCALES, POLICY_KINDS, RankingPolicy, policy_frequencies
from .simgen import ExperimentConfig, Universe, build_synthetic_universe

CSV_COLUMNS = ["policy", "alpha", "beta", "c", "seed", "trial", "t1ps_pct",
               "content_quality", "gini", "runtime_ms"]

BETA_RULES = {"eq": 1.0, "0.35": 0.35}

_STEP_05 = [round(0.05 * i, 10) for i in range(1, 21)]
SYNTHETIC_GRID = tuple(sorted({0.01, 0.025, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, *_STEP_05}))
GERMAN_GRID = tuple(sorted(
    {0.01, 0.025, 1.5, 2.0, *_STEP_05, *(round(1.0 + 0.5 * i, 10) for i in range(13))}
))

_TRIAL_STREAM = 7  # spawn-key tag separating trial streams from universe streams


def trial_rng(seed, point_index, trial):
    ss = np.random.SeedSequence(seed, spawn_key=(_TRIAL_STREAM, point_index, trial))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ResultRow:
    policy: str
    alpha: float | None
    beta: float | None
    c: float | None
    seed: int
    trial: int | str
    t1ps_pct: float
    content_quality: float
    gini: float
    runtime_ms: float | None = None

    def csv_fields(self, with_runtime=False):
        def num(x):
            return "" if x is None else repr(float(x))
        return [
            self.policy, num(self.alpha), num(self.beta), num(self.c), str(self.seed),
            str(self.trial), num(self.t1ps_pct), num(self.content_quality), num(self.gini),
            num(self.runtime_ms) if with_runtime else "",
        ]


@dataclass
class ExperimentResult:
    """Per-trial rows of one policy on one universe, plus their mean."""

    policy: RankingPolicy
    trials: list
    ledger: ImpressionLedger = field(repr=False)

    def _values(self, metric):
        return np.array([getattr(r, metric) for r in self.trials])

    def mean(self, metric):
        return float(self._values(metric).mean())

    def std_error(self, metric):
        v = self._values(metric)
        return float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0

    @property
    def summary(self) -> ResultRow:
        first = self.trials[0]
        runtime = sum(r.runtime_ms or 0.0 for r in self.trials) if first.runtime_ms else None
        return ResultRow(
            first.policy, first.alpha, first.beta, first.c, first.seed, "mean",
            self.mean("t1ps_pct"), self.mean("content_quality"), self.mean("gini"), runtime,
        )

    @property
    def rows(self):
        return [*self.trials, self.summary]


def _policy_fields(policy: RankingPolicy):
    if policy.kind == "scaled_pl":
        return None, None, policy.c
    if policy.kind == "plicfw":
        return policy.alpha, policy.beta, None
    if policy.kind == "inverse_weighted":
        return 0.0, 0.0, None
    if policy.kind == "randomized":
        return None, None, 0.0
    return None, None, None


def run_experiment(universe: Universe, policy: RankingPolicy, n_trials=5, point_index=0,
                   seed=None, record_runtime=False) -> ExperimentResult:
    """Run ``policy`` for ``n_trials`` full passes over ``universe``.

    Candidate frequencies are computed once from the universe's candidate
    sets. Each pass ranks every user's set once and scores the viewed
    prefixes. The deterministic policy is evaluated in a single pass.
    """
    cfg = universe.config
    seed = cfg.seed if seed is None else seed
    batch = universe.candidates
    freqs = policy_frequencies(policy, candidate_frequencies(batch), cfg.m_items)
    n_trials = n_trials if policy.stochastic else 1
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    alpha, beta, c = _policy_fields(policy)

    rows = []
    acc = np.zeros(cfg.m_items)
    for t in range(n_trials):
        start = time.perf_counter()
        viewed = viewed_prefixes(policy, batch, cfg.ell, freqs, trial_rng(seed, point_index, t))
        ledger = ImpressionLedger(impressions(viewed, cfg.m_items))
        cq = content_quality(viewed, universe.truth, cfg.n_users)
        elapsed = (time.perf_counter() - start) * 1000.0
        acc += ledger.counts
        rows.append(ResultRow(
            policy.kind, alpha, beta, c, seed, t,
            t1ps(ledger, cfg.m_items), cq, gini(ledger, cfg.m_items),
            elapsed if record_runtime else None,
        ))
    return ExperimentResult(policy, rows, ImpressionLedger(acc / n_trials))


@dataclass(frozen=True)
class SweepSpec:
    """A hyperparameter grid for one policy family.

    For ``plicfw`` the grid holds alpha values and ``beta_rule`` sets
    ``beta = alpha`` ("eq") or ``beta = 0.35 alpha`` ("0.35"); for
    ``scaled_pl`` it holds the scale ``c``. Other families ignore the grid
    and contribute a single point. ``frequency_scale`` is passed to the
    frequency-weighted families.
    """

    family: str
    grid: tuple = SYNTHETIC_GRID
    beta_rule: str = "eq"
    trials: int = 5
    seed: int = 0
    frequency_scale: str = "fraction"

    def __post_init__(self):
        family = RankingPolicy(self.family).kind
        object.__setattr__(self, "family", family)
        if self.beta_rule not in BETA_RULES:
            raise ConfigError(f"beta_rule must be one of {sorted(BETA_RULES)}")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise ConfigError("grid must be nonempty")
        if any(not np.isfinite(g) or g < 0 for g in grid):
            raise ConfigError("grid values must be finite and >= 0")
        object.__setattr__(self, "grid", grid)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.frequency_scale not in FREQUENCY_SCALES:
            raise ConfigError(f"frequency_scale must be one of {FREQUENCY_SCALES}")

    def policies(self):
        if self.family == "plicfw":
            mult = BETA_RULES[self.beta_rule]
            return [RankingPolicy.plicfw(a, mult * a, self.frequency_scale) for a in self.grid]
        if self.family == "scaled_pl":
            return [RankingPolicy.scaled_pl(c) for c in self.grid]
        return [RankingPolicy(self.family, frequency_scale=self.frequency_scale)]


def _run_point(args):
    universe, policy, trials, point_index, seed, record_runtime = args
    return run_experiment(universe, policy, trials, point_index, seed, record_runtime)


def sweep(spec: SweepSpec, universe: Universe, jobs=1, record_runtime=False,
          point_offset=0):
    """One :class:`ExperimentResult` per grid point, in grid order.

    ``point_offset`` shifts the grid-point index used to key trial streams,
    so several specs swept against one universe draw independent noise.
    """
    tasks = [(universe, p, spec.trials, point_offset + i, spec.seed, record_runtime)
             for i, p in enumerate(spec.policies())]
    if jobs <= 1 or len(tasks) == 1:
        return [_run_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, tasks))


def sweep_all(specs, universe, jobs=1, record_runtime=False):
    """Sweep several specs against one universe; returns a flat result list."""
    out = []
    offset = 0
    for spec in specs:
        out += sweep(spec, universe, jobs, record_runtime, point_offset=offset)
        offset += len(spec.policies())
    return out


def write_results_csv(results, fh, with_runtime=False):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for res in results:
        for row in res.rows:
            w.writerow(row.csv_fields(with_runtime))


def results_to_csv(results, with_runtime=False) -> str:
    buf = io.StringIO()
    write_results_csv(results, buf, with_runtime)
    return buf.getvalue()


# -- toy example -------------------------------------------------------------

TOY_PRODUCERS = tuple("ABCDEFGHIJ")


def toy_candidates() -> CandidateBatch:
    """Ten consumers, ten producers, four candidates each.

    Producer J (id 9) is in every set. Consumer ``i < 9`` sees producers
    ``i, i+1, i+2`` (mod 9) ahead of J; consumer 9 sees J first. Each
    producer therefore tops exactly one ranked list.
    """
    items = [[i, (i + 1) % 9, (i + 2) % 9, 9] for i in range(9)] + [[9, 0, 1, 2]]
    scores = np.tile([4.0, 3.0, 2.0, 1.0], (10, 1))
    return CandidateBatch(np.array(items), scores)


def toy_demo(n_trials=100_000, seed=0):
    """Expected impressions per producer when each consumer views one item.

    Returns rows ``(producer, deterministic, randomized_mc, randomized_exact)``.
    """
    batch = toy_candidates()
    det = expected_impressions(RankingPolicy.deterministic(), batch, ell=1, m_items=10)
    mc = expected_impressions(RankingPolicy.randomized(), batch, ell=1, n_trials=n_trials,
                              rng=trial_rng(seed, 0, 0), m_items=10)
    exact = randomized_expected_impressions(batch, ell=1, m_items=10)
    return [
        (p, float(det.counts[i]), float(mc.counts[i]), float(exact.counts[i]))
        for i, p in enumerate(TOY_PRODUCERS)
    ]


# -- configuration files -----------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """An :class:`ExperimentConfig` plus harness settings from a config file."""

    experiment: ExperimentConfig
    dataset: str = "synthetic"
    data: str | None = None
    trials: int = 5
    epochs: int = 2000
    learning_rate: float = 0.1
    scores: str | None = None


def _read_flat(path):
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[main]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["main"])


def _convert(raw, key, kind, path):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{path}: {key} = {raw!r} is not a valid {kind.__name__}") from None


_INT_KEYS = {"n_users", "m_items", "k", "ell", "n_popular", "seed", "trials", "epochs"}
_FLOAT_KEYS = {"popular_score", "beta_a", "beta_b", "learning_rate"}
_STR_KEYS = {"dataset", "data", "scores"}


def parse_config(values: dict, path="<config>") -> RunConfig:
    """Build a :class:`RunConfig` from flat ``key -> string`` pairs.

    Unset experiment fields take the synthetic defaults, or the German
    defaults when ``dataset = german``.
    """
    unknown = set(values) - _INT_KEYS - _FLOAT_KEYS - _STR_KEYS - {"beta_params"}
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    conv = {}
    for key, raw in values.items():
        if key in _INT_KEYS:
            conv[key] = _convert(raw, key, int, path)
        elif key in _FLOAT_KEYS:
            conv[key] = _convert(raw, key, float, path)
        elif key == "beta_params":
            parts = [p for p in raw.replace(",", " ").split() if p]
            if len(parts) != 2:
                raise ConfigError(f"{path}: beta_params needs two numbers")
            conv["beta_a"], conv["beta_b"] = (_convert(p, key, float, path) for p in parts)
        else:
            conv[key] = raw.strip()
    dataset = conv.pop("dataset", "synthetic")
    if dataset not in ("synthetic", "german"):
        raise ConfigError(f"{path}: dataset must be synthetic or german")
    exp_keys = {"n_users", "m_items", "k", "ell", "n_popular", "popular_score", "seed"}
    exp = {k: conv.pop(k) for k in list(conv) if k in exp_keys}
    if "beta_a" in conv or "beta_b" in conv:
        exp["beta_params"] = (conv.pop("beta_a", 1.0), conv.pop("beta_b", 10.0))
    factory = ExperimentConfig.german if dataset == "german" else ExperimentConfig.synthetic
    return RunConfig(experiment=factory(**exp), dataset=dataset, **conv)


def load_config(path) -> RunConfig:
    return parse_config(_read_flat(path), path)


def _parse_list(raw, kind, key, path):
    return [_convert(p, key, kind, path) for p in raw.replace(",", " ").split()]


def parse_sweep_spec(values: dict, default_grid=SYNTHETIC_GRID, path="<spec>"):
    """Expand a flat spec into one :class:`SweepSpec` per (family, beta rule).

    Keys: ``policy`` (comma list of families), ``grid`` (comma list or
    ``default``), ``beta_rule`` (comma list of ``eq``/``0.35``), ``trials``,
    ``seed``, ``frequency_scale`` (``fraction`` or ``count``).
    """
    allowed = {"policy", "grid", "beta_rule", "trials", "seed", "frequency_scale"}
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    if "policy" not in values:
        raise ConfigError(f"{path}: missing required key 'policy'")
    families = [f.strip() for f in values["policy"].split(",") if f.strip()]
    grid_raw = values.get("grid", "default").strip()
    grid = default_grid if grid_raw == "default" else _parse_list(grid_raw, float, "grid", path)
    rules = [r.strip() for r in values.get("beta_rule", "eq").split(",") if r.strip()]
    trials = _convert(values.get("trials", "5"), "trials", int, path)
    seed = _convert(values.get("seed", "0"), "seed", int, path)
    scale = values.get("frequency_scale", "fraction").strip()
    if scale not in FREQUENCY_SCALES:
        raise ConfigError(f"{path}: frequency_scale must be one of {FREQUENCY_SCALES}")
    specs = []
    try:
        for fam in families:
            kind = RankingPolicy(fam).kind
            for rule in (rules if kind == "plicfw" else ["eq"]):
                specs.append(SweepSpec(kind, tuple(grid), rule, trials, seed, scale))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not specs:
        raise ConfigError(f"{path}: no policies given (choose from {POLICY_KINDS})")
    return specs


def load_sweep_spec(path, default_grid=SYNTHETIC_GRID):
    return parse_sweep_spec(_read_flat(path), default_grid, path)


def load_item_scores(path, m_items):
    """Per-item scores from a CSV with columns ``item_id,score``.

    This is the import path for scores produced by an external model.
    """
    scores = np.full(m_items, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or {"item_id", "score"} - set(reader.fieldnames):
            raise ConfigError(f"{path}: needs columns item_id,score")
        for row in reader:
            v = int(row["item_id"])
            if not 0 <= v < m_items:
                raise ConfigError(f"{path}: item_id {v} outside [0, {m_items})")
            scores[v] = float(row["score"])
    if np.isnan(scores).any():
        raise ConfigError(f"{path}: missing scores for {int(np.isnan(scores).sum())} items")
    return scores


def build_universe(run: RunConfig, data=None):
    """Universe for a :class:`RunConfig`; ``data`` overrides the German path."""
    cfg = run.experiment
    item_scores = None if run.scores is None else load_item_scores(run.scores, cfg.m_items)
    if run.dataset == "german":
        from .german import german_universe

        path = data or run.data
        if path is None:
            raise ConfigError("German experiments need a data path (--data or data = ...)")
        universe, _ = german_universe(path, cfg, run.epochs, run.learning_rate, item_scores)
        return universe
    return build_synthetic_universe(cfg, item_scores)
