"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .exceptions import CapacityError, ConfigError, DataError
from .harness import (
    BETA_RULES,
    GERMAN_GRID,
    SYNTHETIC_GRID,
    RunConfig,
    build_universe,
    load_config,
    load_sweep_spec,
    run_experiment,
    sweep_all,
    toy_demo,
    write_results_csv,
)
from .ranking import FREQUENCY_SCALES, RankingPolicy
from .simgen import ExperimentConfig

log = logging.getLogger("plicfw")


def _policy_from_args(args):
    kind = RankingPolicy(args.policy).kind
    if kind == "plicfw":
        if args.alpha is None:
            raise ConfigError("--alpha is required for plicfw")
        beta = args.beta if args.beta is not None else BETA_RULES[args.beta_rule] * args.alpha
        return RankingPolicy.plicfw(args.alpha, beta, args.frequency_scale)
    if kind == "scaled_pl":
        if args.c is None:
            raise ConfigError("--c is required for scaled_pl")
        return RankingPolicy.scaled_pl(args.c)
    return RankingPolicy(kind, frequency_scale=args.frequency_scale)


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _emit(results, out, record_runtime):
    fh = _open_out(out)
    try:
        write_results_csv(results, fh, with_runtime=record_runtime)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _run_config(args, dataset):
    run = load_config(args.config) if args.config else RunConfig(
        ExperimentConfig.german() if dataset == "german" else ExperimentConfig.synthetic(),
        dataset=dataset,
    )
    overrides = {}
    if dataset == "german" and run.dataset != "german":
        raise ConfigError("config for the german subcommand must set dataset = german")
    if getattr(args, "seed", None) is not None:
        overrides["experiment"] = run.experiment.with_(seed=args.seed)
    if getattr(args, "scores", None):
        overrides["scores"] = args.scores
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if overrides:
        from dataclasses import replace

        run = replace(run, **overrides)
    return run


def cmd_toy(args):
    rows = toy_demo(n_trials=args.trials, seed=args.seed)
    fh = _open_out(args.out)
    try:
        fh.write("producer,deterministic,randomized_mc,randomized_exact\n")
        for p, det, mc, exact in rows:
            fh.write(f"{p},{det!r},{mc!r},{exact!r}\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_simulate(args, dataset="synthetic"):
    run = _run_config(args, dataset)
    universe = build_universe(run, data=getattr(args, "data", None))
    policy = _policy_from_args(args)
    result = run_experiment(universe, policy, run.trials, record_runtime=args.record_runtime)
    _emit([result], args.out, args.record_runtime)


def cmd_german(args):
    run = _run_config(args, "german")
    universe = build_universe(run, data=args.data)
    if args.universe_out:
        from .german import write_universe_csv

        write_universe_csv(universe, args.universe_out)
    if args.spec:
        specs = load_sweep_spec(args.spec, default_grid=GERMAN_GRID)
        results = sweep_all(specs, universe, args.jobs, args.record_runtime)
    elif args.policy:
        results = [run_experiment(universe, _policy_from_args(args), run.trials,
                                  record_runtime=args.record_runtime)]
    else:
        return
    _emit(results, args.out, args.record_runtime)


def cmd_sweep(args):
    run = _run_config(args, "synthetic")
    grid = GERMAN_GRID if run.dataset == "german" else SYNTHETIC_GRID
    specs = load_sweep_spec(args.spec, default_grid=grid)
    universe = build_universe(run, data=args.data)
    results = sweep_all(specs, universe, args.jobs, args.record_runtime)
    _emit(results, args.out, args.record_runtime)


def cmd_feasible(args):
    from .metrics import equal_exposure_feasible

    try:
        with open(args.sets) as fh:
            sets = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.sets}: {exc}") from None
    ok, witness = equal_exposure_feasible(sets, args.k)
    print(json.dumps({"feasible": ok, "witness": witness}))


def _add_policy_args(p, required=True):
    p.add_argument("--policy", required=required,
                   help="deterministic | randomized | scaled_pl | inverse_weighted | plicfw")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta-rule", choices=sorted(BETA_RULES), default="eq")
    p.add_argument("--beta", type=float, help="explicit beta; overrides --beta-rule")
    p.add_argument("--c", type=float)
    p.add_argument("--frequency-scale", choices=FREQUENCY_SCALES, default="fraction",
                   help="candidate frequency as a fraction of sets (default) or a raw count")


def _add_common(p):
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trials", type=int, help="override trials per point")
    p.add_argument("--scores", help="CSV item_id,score of externally supplied relevance")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--record-runtime", action="store_true",
                   help="fill runtime_ms (makes output timing-dependent)")


def build_parser():
    parser = argparse.ArgumentParser(prog="plicfw", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toy", help="expected impressions on the ten-consumer toy example")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("simulate", help="run one policy on a simulated universe")
    p.add_argument("--config")
    p.add_argument("--data", help="German data path when the config selects it")
    _add_policy_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("german", help="German credit experiment")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--spec", help="sweep spec; otherwise --policy runs a single point")
    p.add_argument("--universe-out", help="write the candidate universe CSV here")
    p.add_argument("--jobs", type=int, default=1)
    _add_policy_args(p, required=False)
    _add_common(p)
    p.set_defaults(func=cmd_german)

    p = sub.add_parser("sweep", help="hyperparameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--data", help="German data path when the config selects it")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("feasible", help="exhaustive equal-exposure feasibility check")
    p.add_argument("--sets", required=True, help="JSON list of candidate sets")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_feasible)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 1
    except (DataError, FileNotFoundError) as exc:
        log.error("data error: %s", exc)
        return 2
    except CapacityError as exc:
        log.error("capacity error: %s", exc)
        return 3
    except ValueError as exc:
        log.error("invalid argument: %s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
