"""Shadow-agent protocol: a flat agent trained beside a two-level agent on a
fixed 70/30 mixture of its own and the hierarchical agent's experience.

The hierarchical side trains exactly as it would alone; the shadow only ever
sees atomic (s, a, r, s', done) records, so any edge it gains over a plain
flat baseline comes from the borrowed exploration, not from representation.
"""

from __future__ import annotations

import numpy as np

from . import envs, rollouts
from .agents_flat import AgentBundle, TD3Batch, nstep_batch, td3_train_step
from .agents_hrl import ExplorationFlags, GoalConditionedPair
from .replay import (ReplayBuffer, StampedArrayBuffer, mixed_sample_indices, window_at)


class ShadowRig:
    """A hierarchical agent, a flat shadow, and their separate buffers."""

    def __init__(self, hrl_agent: GoalConditionedPair, shadow_agent: AgentBundle,
                 mix_fraction: float = 0.7, c_rew: int = 3,
                 buffer_capacity: int = 1_000_000):
        self.hrl = hrl_agent
        self.shadow = shadow_agent
        self.mix_fraction = mix_fraction
        self.c_rew = c_rew
        self.hrl_low_buffer = ReplayBuffer(buffer_capacity)
        self.hrl_high_buffer = ReplayBuffer(buffer_capacity)
        self.hrl_buffer = StampedArrayBuffer(buffer_capacity)  # atomic view of HRL rollouts
        self.shadow_buffer = StampedArrayBuffer(buffer_capacity)
        self._episodes = 0

    def collect(self, spec: envs.EnvSpec, flags: ExplorationFlags, shadow_noise_std: float,
                env_rng, act_rng, warmup: bool = False) -> int:
        """One HRL episode and one shadow episode; returns total env steps."""
        n = rollouts.collect_episode_goal(
            self.hrl, spec, flags, env_rng, act_rng,
            low_buffer=self.hrl_low_buffer, high_buffer=self.hrl_high_buffer,
            episode_id=self._episodes, atomic_buffer=self.hrl_buffer)
        n += rollouts.collect_episode_flat(
            self.shadow, spec, shadow_noise_std, env_rng, act_rng,
            self.shadow_buffer, episode_id=self._episodes, warmup=warmup)
        self._episodes += 1
        return n


def shadow_collect(rig: ShadowRig, spec: envs.EnvSpec, rng: np.random.Generator,
                   flags: ExplorationFlags | None = None,
                   shadow_noise_std: float = 0.3, warmup: bool = False) -> int:
    """One round of collection: one HRL episode and one shadow episode."""
    if flags is None:
        flags = ExplorationFlags(high_noise_std=0.3, low_noise_std=0.3, warmup=warmup)
    return rig.collect(spec, flags, shadow_noise_std, rng, rng, warmup=warmup)


def shadow_train_step(rig: ShadowRig, batch_size: int, rng: np.random.Generator):
    """One shadow update on an exactly 70/30 (by ``mix_fraction``) mixed batch,
    with multi-step reward windows built inside each source buffer. (Record
    order within a batch does not affect the update, so the two sides are
    gathered separately.)"""
    pairs = mixed_sample_indices(len(rig.shadow_buffer), len(rig.hrl_buffer),
                                 batch_size, rig.mix_fraction, rng)
    own = np.array([idx for which, idx in pairs if which == 0], dtype=np.int64)
    borrowed = np.array([idx for which, idx in pairs if which == 1], dtype=np.int64)
    sides = []
    for buf, starts in ((rig.shadow_buffer, own), (rig.hrl_buffer, borrowed)):
        if len(starts) == 0:
            continue
        if isinstance(buf, StampedArrayBuffer):
            sides.append(buf.nstep_windows(starts, rig.c_rew))
        else:
            recs = [window_at(buf, int(i), rig.c_rew) for i in starts]
            b = nstep_batch(recs)
            sides.append((b.s, b.a, b.r_sum, b.s_next, b.done, b.horizon))
    batch = TD3Batch(*[np.concatenate([side[k] for side in sides]) for k in range(6)])
    return td3_train_step(rig.shadow, batch, rng)
