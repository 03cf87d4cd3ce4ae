#!/usr/bin/env python3
"""The headline study: flat vs hierarchical vs hierarchy-inspired exploration
on the maze, with learning curves written as SVG.

By default this runs a abbreviated version (one seed, 60k steps, ~10 min).
Pass --full for the 300k-step, 3-seed study the acceptance suite uses
(roughly half an hour per method on two cores)."""

import argparse
import dataclasses
from pathlib import Path

from hierlab import harness

parser = argparse.ArgumentParser()
parser.add_argument("--full", action="store_true")
parser.add_argument("--out", default="/tmp/hierlab-study")
args = parser.parse_args()

base = harness.ExperimentConfig(
    task="MazeDesk",
    seeds=[0, 1, 2] if args.full else [0],
    total_env_steps=300_000 if args.full else 60_000,
    eval_every=10_000,
    eval_episodes=20 if args.full else 10,
    early_stop_success=1.0,
    workers=2,
    output_dir=args.out,
)

runs = [
    ("Flat", dict(method="Flat")),
    ("GoalHRL", dict(method="GoalHRL", c_train=10, c_expl=10)),
    ("ExploreExploit", dict(method="ExploreExploit", c_switch=10, c_rew=3)),
]

csvs = []
for name, overrides in runs:
    cfg = dataclasses.replace(base, **overrides)
    print(f"running {name} ...")
    records = harness.run_experiment(cfg)
    best = harness.mean_best_success(records)
    print(f"  {name}: mean best success {best:.2f}")
    csvs.append(Path(harness.output_dir(cfg)) / f"{cfg.method}_{cfg.task}.csv")

plot = Path(args.out) / "maze_study.svg"
harness.emit_curves(csvs, plot)
print(f"curves written to {plot}")
