#!/usr/bin/env python3
"""The two hierarchy-inspired exploration schemes, without any hierarchy:
temporally correlated goal sampling for Explore & Exploit, and temporally
extended agent switching for both methods."""

import numpy as np

from hierlab import envs, explore, replay
from hierlab.agents_flat import AgentBundle
from hierlab.rngs import substream

rng = substream(6, "demo-explore")

# the mean-reverting goal process: temporally correlated, wide stationary spread
ou = explore.ou_init(dim=1, sigma=5.0, damping=0.8)
vals = []
for _ in range(100_000):
    ou = explore.ou_next(ou, rng)
    vals.append(ou.value[0])
print(f"goal process: empirical std {np.std(vals):.3f} vs closed form "
      f"{explore.ou_stationary_std(5.0, 0.8):.3f}")
print(f"lag-1 autocorrelation {np.corrcoef(vals[:-1], vals[1:])[0, 1]:.3f} "
      "(temporally extended, not white noise)")

# the switching scheduler: 20% explore / 80% exploit, constant within windows
sched = explore.SwitchSchedule(c_switch=10, weights=np.array([0.2, 0.8]))
seq = [explore.next_agent(sched, t, rng) for t in range(100)]
print("\nactive agent over 100 steps (0=explore, 1=exploit):")
print("  " + "".join(str(i) for i in seq))
draws = [explore.next_agent(sched, 10 * k, rng) for k in range(50_000)]
print(f"explore fraction over 50k switch events: {np.mean(np.array(draws) == 0):.3f}")

# a short Explore & Exploit collection phase on the maze
spec = envs.make_spec("MazeDesk")
pair = explore.ExploreExploitPair(
    exploit=AgentBundle(spec.obs_dim, 2, hidden=(32, 32), rng=substream(6, "b1")),
    explore=AgentBundle(spec.obs_dim + 2, 2, hidden=(32, 32), rng=substream(6, "b2")),
    shared_buffer=replay.StampedArrayBuffer(100_000), goal_scale=2.0)
sched = explore.SwitchSchedule(c_switch=10, weights=pair.weights)
ou = explore.ou_init(sigma=1.0, damping=0.8)
state, obs = envs.reset(spec, substream(6, "env"))
act_rng = substream(6, "act")
for t in range(200):
    state, res, ou = explore.ee_collect_step(pair, spec, state, obs, ou, sched, t,
                                             act_rng, episode_id=0, step_idx=t)
    obs = res.observation
    if res.done:
        break
tags = [r.tag for r in pair.shared_buffer.records()]
print(f"\ncollected {len(pair.shared_buffer)} shared transitions; "
      f"explore steps: {tags.count(0)}, exploit steps: {tags.count(1)}")
print("both agents will train from this one buffer: the exploit agent on "
      "multi-step task rewards, the explore agent on goal-reaching rewards")
