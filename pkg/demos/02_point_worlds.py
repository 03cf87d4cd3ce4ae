#!/usr/bin/env python3
"""Walk through the four desk-scale point-mass tasks: geometry, observations,
dynamics, and what a random policy does in each."""

import numpy as np

from hierlab import envs
from hierlab.rngs import substream

for task in envs.TASKS:
    spec = envs.make_spec(task)
    print(f"\n=== {task} ===")
    print(f"goal entity: {spec.goal_entity}; target {spec.target_xy}; "
          f"obs dim {spec.obs_dim}; episode limit {spec.episode_limit}")
    print("wall segments (x0 y0 x1 y1):")
    print(envs.dump_walls(spec))

    rng = substream(1, "demo-envs", task)
    state, obs = envs.reset(spec, rng)
    print("initial obs:", np.round(obs, 3))

    # a random policy: how close does it get in one episode?
    best = np.inf
    while True:
        state, res = envs.step(spec, state, rng.uniform(-1, 1, 2))
        best = min(best, -res.reward * spec.arena_halfwidth)
        if res.done:
            break
    print(f"random policy: closest approach {best:.2f} units "
          f"(success radius {spec.success_radius}), success={res.success}")

# the velocity recurrence, by hand: friction keeps 90% of velocity, dt scales
# how fast actions change it, and position advances by the velocity each step
spec = envs.make_spec("BlockDesk")
state = envs.EnvState(agent_xy=np.array([-4.0, 0.0]), agent_vel=np.zeros(2),
                      block_xy=np.array([3.0, 3.0]), block_vel=np.zeros(2), t=0)
print("\nconstant push (1, 0) from rest:")
for k in range(5):
    state, _ = envs.step(spec, state, np.array([1.0, 0.0]))
    print(f"  step {k + 1}: vel_x {state.agent_vel[0]:.4f}  x {state.agent_xy[0]:.4f}")
