"""Tuning probe: run one method/seed, print eval curve + exploration reach.

Reach columns: fraction of collected steps in the last window that were in
the right corridor (x past the slab) and in the upper arm (y above the slab).
"""
import sys
import time

import numpy as np

from hierlab import harness, envs
from hierlab.rngs import substream

method = sys.argv[1]
seed = int(sys.argv[2])
steps = int(sys.argv[3]) if len(sys.argv) > 3 else 150_000
over = {}
for arg in sys.argv[4:]:
    k, v = arg.split("=")
    over[k] = harness._coerce(k, __import__("json").loads(v))

cfg = harness.ExperimentConfig(
    task="MazeDesk", method=method, seeds=[seed], total_env_steps=steps,
    eval_every=10_000, eval_episodes=10, output_dir="/tmp/probe",
    save_checkpoints=False, **over)

adapter = harness.build_method(cfg, seed)
wall = envs.make_spec("MazeDesk").wall_segments[0]

def buffers(a):
    for name in ("buffer", "low_buffer", "step_buffer"):
        if hasattr(a, name):
            return getattr(a, name)
    if hasattr(a, "pair"):
        return a.pair.shared_buffer
    if hasattr(a, "ensemble"):
        return a.ensemble.shared_buffer
    if hasattr(a, "rig"):
        return a.rig.hrl_buffer
    return None

def reach(buf, since):
    xs, ys = [], []
    n = len(buf)
    for i in range(max(0, since), n):
        rec = buf[i]
        s = rec.s if hasattr(rec, "s") else rec[0]
        xs.append(s[0])
        ys.append(s[1])
    if not xs:
        return 0.0, 0.0
    xs, ys = np.array(xs), np.array(ys)
    right = np.mean(xs > wall[2])
    upper = np.mean(ys > wall[3])
    return right, upper

t0 = time.time()
next_eval = 0
trained = 0
seen = 0
while True:
    if next_eval <= adapter.env_steps:
        rng = substream(seed, "eval", str(next_eval))
        rate, ret = harness.evaluate(adapter.policy_factory(rng), adapter.spec,
                                     cfg.eval_episodes, rng)
        buf = buffers(adapter)
        r, u = reach(buf, seen) if buf is not None else (0, 0)
        seen = len(buf) if buf is not None else 0
        print(f"[{method} s{seed}] step {adapter.env_steps:>7} eval@{next_eval:>7} "
              f"success {rate:.2f} return {ret:8.2f} right {r:.3f} upper {u:.3f} "
              f"elapsed {time.time()-t0:6.1f}s", flush=True)
        next_eval += cfg.eval_every
    if adapter.env_steps >= cfg.total_env_steps:
        break
    adapter.collect_episode()
    want = adapter.env_steps // cfg.env_steps_per_train_step
    while trained < want:
        adapter.train_step()
        trained += 1
