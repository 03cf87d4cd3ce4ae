#!/usr/bin/env python3
"""The experience pipeline: multi-step aggregation windows, goal freezing,
hindsight relabeling, and exact-composition mixed sampling."""

import numpy as np

from hierlab import replay
from hierlab.rngs import substream

rng = substream(2, "demo-replay")

# a toy 8-step trajectory with a terminal at step 5
traj = []
for t in range(8):
    traj.append(replay.Transition(s=np.array([float(t), 0.0]), a=np.zeros(2),
                                  r=float(t), s_next=np.array([t + 1.0, 0.0]),
                                  done=(t == 5)))

print("c-step aggregation over rewards 0..7 (terminal at t=5):")
for t, c in [(0, 3), (4, 4), (6, 4)]:
    rec = replay.aggregate_cstep(traj, t, c)
    print(f"  t={t} c={c}: r_sum={rec.r_sum:4.1f} horizon={rec.horizon} done={rec.done}")

print("\nn-step target inputs are the same windows keyed to the first action:")
rec = replay.nstep_target_inputs(traj, 4, 3)
print(f"  t=4 n=3: r_sum={rec.r_sum} horizon={rec.horizon} done={rec.done}")

# goal freezing: low-level training pretends the goal never changed
g = replay.GoalTransition(s=np.zeros(6), g=np.array([1.0, 2.0]), a=np.zeros(2),
                          r_int=-1.0, s_next=np.zeros(6), g_next=np.array([3.0, 4.0]),
                          done=False, anchor_xy=np.zeros(2), next_xy=np.array([0.5, 1.0]))
frozen = replay.freeze_goal(g)
print(f"\nfreeze_goal: g_next {g.g_next} -> {frozen.g_next}")

# hindsight: relabel the goal with what was actually achieved
achieved = g.next_xy - g.anchor_xy
relabeled = replay.hindsight_relabel(frozen, achieved)
print(f"hindsight: goal {frozen.g} -> {relabeled.g}, intrinsic reward "
      f"{frozen.r_int} -> {relabeled.r_int:.3f} (achieved goal scores 0)")

# mixed sampling: exactly 7 from A and 3 from B in every batch of 10
a, b = replay.ReplayBuffer(100), replay.ReplayBuffer(100)
for i in range(50):
    a.append(("A", i))
    b.append(("B", i))
counts = []
for _ in range(5):
    batch = replay.sample_mixed(a, b, 10, 0.7, rng)
    counts.append(sum(1 for tag, _ in batch if tag == "A"))
print(f"\nmixed 70/30 batches of 10: draws from A per batch = {counts}")
