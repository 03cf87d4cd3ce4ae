#!/usr/bin/env python3
"""Watch a flat TD3 agent on the maze: the dense reward pulls it straight at
the wall below the target, where it parks. Returns improve early (it learns
to reach the wall quickly) and then flatline; success stays at zero.

About a minute of compute. Pass --steps to change the budget."""

import argparse

import numpy as np

from hierlab import harness
from hierlab.rngs import substream

parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=30_000)
args = parser.parse_args()

cfg = harness.ExperimentConfig(task="MazeDesk", method="Flat", seeds=[0],
                               total_env_steps=args.steps, eval_every=5_000,
                               eval_episodes=5, output_dir="/tmp/hierlab-demo",
                               save_checkpoints=False)
adapter = harness.build_method(cfg, 0)
trained = 0
next_eval = 0
while True:
    if next_eval <= adapter.env_steps:
        rng = substream(0, "eval", str(next_eval))
        rate, ret = harness.evaluate(adapter.policy_factory(rng), adapter.spec,
                                     cfg.eval_episodes, rng)
        print(f"step {adapter.env_steps:6d}: success {rate:.2f}  return {ret:8.2f}")
        next_eval += cfg.eval_every
    if adapter.env_steps >= cfg.total_env_steps:
        break
    adapter.collect_episode()
    while trained < adapter.env_steps // cfg.env_steps_per_train_step:
        adapter.train_step()
        trained += 1

# where does the greedy policy end up?
policy = adapter.policy_factory(substream(0, "trace"))()
from hierlab import envs

state, obs = envs.reset(adapter.spec, substream(0, "trace-env"))
while True:
    state, res = envs.step(adapter.spec, state, np.asarray(policy(obs)))
    obs = res.observation
    if res.done:
        break
print(f"\ngreedy endpoint: {np.round(state.agent_xy, 2)} "
      f"(target {adapter.spec.target_xy}; the wall spans y in "
      f"[{adapter.spec.wall_segments[0][1]}, {adapter.spec.wall_segments[0][3]}])")
print("the agent sits under the wall: distance is minimized locally, the task unsolved")
