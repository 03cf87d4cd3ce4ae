"""Command-line front end: run experiments, sweep an axis, evaluate a saved
checkpoint, and plot CSV learning curves.

Exit codes: 0 on success, 2 on configuration errors, 3 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError
from .rngs import substream


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hierlab",
                                     description="desk-scale hierarchy-vs-exploration lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="JSON config file or literal JSON")
    p_run.add_argument("-o", "--csv", default=None, help="output CSV path")

    p_sweep = sub.add_parser("sweep", help="run a config across one axis")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values, e.g. 1,5,10 or true,false")

    p_eval = sub.add_parser("eval", help="evaluate a saved checkpoint")
    p_eval.add_argument("checkpoint", help="checkpoint directory (with manifest.json)")
    p_eval.add_argument("task", help="task to evaluate on")
    p_eval.add_argument("--episodes", type=int, default=20)
    p_eval.add_argument("--seed", type=int, default=0)

    p_plot = sub.add_parser("plot", help="plot success curves from CSVs")
    p_plot.add_argument("csv", nargs="+")
    p_plot.add_argument("-o", "--out", required=True, help="output SVG path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = harness.load_config(args.config)
            records = harness.run_experiment(cfg, args.csv)
            per_seed = harness.best_success_by_seed(records)
            for seed in cfg.seeds:
                print(f"seed {seed}: best success {per_seed.get(seed, 0.0):.3f}")
            print(f"mean best success: {harness.mean_best_success(records):.3f}")
            return 0
        if args.command == "sweep":
            cfg = harness.load_config(args.config)
            values = [_parse_value(v) for v in args.values.split(",")]
            index = harness.sweep(cfg, args.axis, values)
            for value, path in index.items():
                print(f"{args.axis}={value}: {path}")
            return 0
        if args.command == "eval":
            adapter, cfg = harness.load_checkpoint(args.checkpoint, task=args.task)
            rng = substream(args.seed, "cli-eval")
            rate, mean_ret = harness.evaluate(adapter.policy_factory(rng), adapter.spec,
                                              args.episodes, rng)
            print(f"success_rate {rate:.3f} mean_return {mean_ret:.4f}")
            return 0
        if args.command == "plot":
            missing = [p for p in args.csv if not Path(p).exists()]
            if missing:
                raise ConfigError(f"missing CSV file(s): {missing}")
            harness.emit_curves(args.csv, args.out)
            print(f"wrote {args.out}")
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface anything else as a runtime error
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
