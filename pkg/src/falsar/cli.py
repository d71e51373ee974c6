"""Command line: ``falsify``, ``bench`` and ``monitor``."""

from __future__ import annotations

import argparse
import json
import sys

from . import bandit
from .falsify import ALGORITHMS, falsify
from .harness import (
    SEED_ENV,
    ConfigError,
    ExperimentConfig,
    aggregate,
    default_seed,
    format_csv,
    run_experiment,
    write_csv,
)
from .hillclimb import OPTIMIZERS
from .signals import Signal, SignalError
from .stl import STLEvaluationError, STLSyntaxError, eval_boolean, eval_robust, parse
from .systems import ModelError, ScaledModel, load_model, model_names, parse_model_params, scale_formula


def _scale_arg(text: str) -> tuple[str, int]:
    ch, sep, k = text.rpartition(":")
    if not sep or not ch:
        raise argparse.ArgumentTypeError(f"expected channel:k, got {text!r}")
    try:
        return ch, int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"scale exponent must be an integer, got {k!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="falsar", description="STL falsification with bandit-guided hill climbing.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("falsify", help="run one falsification trial and print a JSON result")
    f.add_argument("--model", required=True, choices=model_names())
    f.add_argument("--model-param", action="append", default=[], metavar="KEY=VALUE")
    f.add_argument("--spec", required=True, help="STL formula")
    f.add_argument("--algo", default="hc", choices=ALGORITHMS)
    f.add_argument("--mab", choices=bandit.STRATEGIES, help="shorthand for --algo mab-<strategy>")
    f.add_argument("--budget", type=int, required=True, help="simulation budget")
    f.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
    f.add_argument("--scale", type=_scale_arg, metavar="CHANNEL:K", help="multiply an output by 10^K")
    f.add_argument("--mab-eps", type=float, default=bandit.DEFAULT_EPSILON)
    f.add_argument("--mab-c", type=float, default=bandit.DEFAULT_UCB_C)
    f.add_argument("--optimizer", default="cmaes", choices=OPTIMIZERS + ("cmaes-lite",))
    f.add_argument("--control-points", type=int, default=None)
    f.add_argument("--timeout", type=float, default=None, help="wall-clock limit in seconds")
    f.add_argument("--out", help="write the JSON here instead of stdout")

    b = sub.add_parser("bench", help="run a campaign described by a JSON config")
    b.add_argument("--config", required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--trials", type=int)
    b.add_argument("--budget", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--raw", help="raw CSV path (overrides the config)")
    b.add_argument("--summary", help="summary CSV path (overrides the config)")

    m = sub.add_parser("monitor", help="robustness of a formula on a CSV trace")
    m.add_argument("--spec", required=True)
    m.add_argument("--trace", required=True, help="CSV with header time,<channels>")
    m.add_argument("--json", action="store_true", help="print a JSON object")
    return p


def cmd_falsify(args) -> int:
    model = load_model(args.model, **parse_model_params(args.model_param))
    phi = parse(args.spec)
    if args.scale:
        ch, k = args.scale
        model, phi = ScaledModel(model, ch, k), scale_formula(phi, ch, k)
    algo = f"mab-{args.mab}" if args.mab else args.algo
    seed = default_seed() if args.seed is None else args.seed
    options = dict(optimizer=args.optimizer, control_points=args.control_points, timeout=args.timeout)
    if algo != "hc":
        options.update(epsilon=args.mab_eps, c=args.mab_c)
    res = falsify(model, phi, algo, args.budget, seed=seed, **options)
    doc = res.to_dict()
    doc.update(model=args.model, spec=args.spec, seed=seed, budget=args.budget)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    for key in ("trials", "budget", "seed"):
        if getattr(args, key) is not None:
            setattr(cfg, key, getattr(args, key))
    cfg.__post_init__()
    if args.raw:
        cfg.raw_path = args.raw
    if args.summary:
        cfg.summary_path = args.summary
    raw = run_experiment(cfg, jobs=args.jobs)
    summary = aggregate(raw)
    if cfg.raw_path:
        write_csv(raw, cfg.raw_path)
    else:
        sys.stdout.write(format_csv(raw))
    if cfg.summary_path:
        write_csv(summary, cfg.summary_path)
    else:
        sys.stdout.write(format_csv(summary))
    return 0


def cmd_monitor(args) -> int:
    phi = parse(args.spec)
    w = Signal.from_csv(args.trace)
    rb = eval_robust(phi, w)
    sat = eval_boolean(phi, w)
    if args.json:
        value = rb if abs(rb) != float("inf") else ("inf" if rb > 0 else "-inf")
        sys.stdout.write(json.dumps({"robustness": value, "satisfied": sat}) + "\n")
    else:
        sys.stdout.write(f"{rb!r}\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"falsify": cmd_falsify, "bench": cmd_bench, "monitor": cmd_monitor}[args.command]
    try:
        return handler(args)
    except (ConfigError, ModelError, SignalError, STLSyntaxError, STLEvaluationError, OSError, ValueError) as exc:
        print(f"falsar {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
