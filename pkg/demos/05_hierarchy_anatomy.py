#!/usr/bin/env python3
"""Anatomy of the two-level agent: the goal schedule during a rollout, the
frozen-goal records the low level trains on, hindsight relabeling, and the
off-policy goal relabeling the high level can apply at sample time."""

import numpy as np

from hierlab import agents_hrl as hrl
from hierlab import envs, replay, rollouts
from hierlab.rngs import substream

spec = envs.make_spec("MazeDesk")
cfg = hrl.HrlConfig(c_train=10, c_expl=10)
pair = hrl.GoalConditionedPair(spec.obs_dim, 2, cfg, hidden=(32, 32),
                               rng=substream(3, "demo-hrl"))

# one noisy rollout: goals change exactly every c_expl steps
flags = hrl.ExplorationFlags(high_noise_std=0.3, low_noise_std=0.3)
rng = substream(3, "demo-act")
state, obs = envs.reset(spec, substream(3, "demo-env"))
hstate = None
print("goal schedule (first 25 steps):")
for t in range(25):
    action, hstate = hrl.act_hierarchy(pair, obs, hstate, flags, rng)
    marker = " <- new goal sampled" if t % cfg.c_expl == 0 else ""
    print(f"  t={t:2d} goal={np.round(hstate.active_goal, 2)}{marker}")
    state, res = envs.step(spec, state, action)
    obs = res.observation

# collect a full episode into buffers and inspect the records
low_buf, high_buf = replay.ReplayBuffer(10_000), replay.ReplayBuffer(10_000)
n = rollouts.collect_episode_goal(pair, spec, flags, substream(4, "env"),
                                  substream(4, "act"), low_buf, high_buf, episode_id=0)
print(f"\nepisode of {n} steps -> {len(low_buf)} low-level records, "
      f"{len(high_buf)} high-level records")
rec = low_buf[3]
print(f"low-level record: goal {np.round(rec.g, 2)} == next goal "
      f"{np.round(rec.g_next, 2)} (frozen); intrinsic reward {rec.r_int:.3f}")

crec = high_buf[0]
print(f"high-level record: goal {np.round(np.asarray(crec.g_t), 2)}, "
      f"{crec.horizon}-step reward sum {crec.r_sum:.3f}")

# hindsight: pretend the achieved displacement was the commanded goal
achieved = rec.next_xy - rec.anchor_xy
relabeled = replay.hindsight_relabel(rec, achieved)
print(f"\nhindsight relabel: goal {np.round(rec.g, 2)} -> "
      f"{np.round(relabeled.g, 2)}, r_int {rec.r_int:.3f} -> {relabeled.r_int:.3f}")

# off-policy high-level relabeling scores candidate goals by how well the
# current low level reproduces the logged actions
low_buf2, high_buf2 = replay.ReplayBuffer(10_000), replay.ReplayBuffer(10_000)
rollouts.collect_episode_goal(pair, spec, flags, substream(5, "env"), substream(5, "act"),
                              low_buf2, high_buf2, episode_id=0, log_windows=True)
original = high_buf2[0]
relabeled = hrl.hiro_offpolicy_relabel(original, pair, substream(5, "cand"))
print(f"off-policy relabel: stored goal {np.round(np.asarray(original.g_t), 2)} -> "
      f"{np.round(np.asarray(relabeled.g_t), 2)}")
