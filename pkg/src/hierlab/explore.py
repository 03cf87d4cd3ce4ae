"""Hierarchy-inspired exploration for flat agents: Explore & Exploit (a
goal-chasing explorer and a task-reward exploiter taking turns) and the
Switching Ensemble (several task agents taking turns), plus the shared
temporally extended switching scheduler and the mean-reverting goal sampler.

Both methods act in the atomic action space and share one replay buffer per
rig; the switch horizon controls how temporally extended the behavior is.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import envs
from .agents_flat import (AgentBundle, TD3Batch, sample_nstep_batch, td3_select_action,
                          td3_train_step)
from .agents_hrl import low_features
from .replay import ReplayBuffer, StampedArrayBuffer, StampedTransition


@dataclass
class OuState:
    """First-order mean-reverting noise over goal space.

    ``form`` picks the recurrence: ``subtract`` steps by
    (1 - damping) * value + noise; ``retain`` steps by damping * value + noise.
    """

    value: np.ndarray
    sigma: float
    damping: float
    form: str = "subtract"

    def __post_init__(self):
        if self.form not in ("subtract", "retain"):
            raise ValueError(f"unknown OU form {self.form!r}")


def ou_init(dim: int = 2, sigma: float = 1.0, damping: float = 0.8,
            form: str = "subtract") -> OuState:
    return OuState(value=np.zeros(dim), sigma=sigma, damping=damping, form=form)


def ou_next(state: OuState, rng: np.random.Generator) -> OuState:
    keep = (1.0 - state.damping) if state.form == "subtract" else state.damping
    value = keep * state.value + rng.normal(0.0, state.sigma, size=state.value.shape)
    return replace(state, value=value)


def ou_stationary_std(sigma: float, damping: float, form: str = "subtract") -> float:
    keep = (1.0 - damping) if form == "subtract" else damping
    return sigma / np.sqrt(1.0 - keep**2)


@dataclass
class SwitchSchedule:
    """Re-draws the active agent index every ``c_switch`` steps."""

    c_switch: int
    weights: np.ndarray
    current_index: int = -1
    steps_since_switch: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.c_switch < 1:
            raise ValueError("c_switch must be >= 1")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must be a probability vector, got {self.weights}")


def next_agent(schedule: SwitchSchedule, t: int, rng: np.random.Generator) -> int:
    if t < 0:
        raise ValueError("t must be non-negative")
    if t % schedule.c_switch == 0:
        schedule.current_index = int(rng.choice(len(schedule.weights), p=schedule.weights))
    schedule.steps_since_switch = t % schedule.c_switch
    return schedule.current_index


class ExploreExploitPair:
    """One agent chases task reward, the other chases sampled goals; both act
    on atomic actions and share a single replay buffer."""

    def __init__(self, exploit: AgentBundle, explore: AgentBundle,
                 shared_buffer: ReplayBuffer, goal_scale: float,
                 ou_sigma: float = 1.0, ou_damping: float = 0.8, ou_form: str = "subtract",
                 weights=(0.2, 0.8)):
        self.exploit = exploit
        self.explore = explore
        self.shared_buffer = shared_buffer
        self.goal_scale = goal_scale
        self.ou_sigma = ou_sigma
        self.ou_damping = ou_damping
        self.ou_form = ou_form
        self.weights = np.asarray(weights, dtype=float)  # (explore, exploit)

    def members(self):
        return [self.explore, self.exploit]


class SwitchingEnsemble:
    """Several task agents sharing one buffer; one acts at a time."""

    def __init__(self, members: list[AgentBundle], shared_buffer: ReplayBuffer):
        self.members = members
        self.shared_buffer = shared_buffer


def ee_collect_step(pair: ExploreExploitPair, spec: envs.EnvSpec, state, obs,
                    ou: OuState, schedule: SwitchSchedule, t: int,
                    rng: np.random.Generator, episode_id: int, step_idx: int,
                    noise_std: float = 0.3, warmup: bool = False):
    """One environment step of Explore & Exploit collection.

    Index 0 is the explore agent, 1 the exploit agent. The goal process
    advances every step; the transition lands in the shared buffer stamped
    with the goal that was active.
    """
    idx = next_agent(schedule, t, rng)
    ou = ou_next(ou, rng)
    goal = np.clip(ou.value, -pair.goal_scale, pair.goal_scale)
    anchor = np.asarray(obs[:2], float)
    if warmup:
        action = rng.uniform(-1.0, 1.0, pair.exploit.action_dim)
    elif idx == 0:
        action = td3_select_action(pair.explore, low_features(obs, goal, anchor),
                                   noise_std, rng)
    else:
        action = td3_select_action(pair.exploit, obs, noise_std, rng)
    state, res = envs.step(spec, state, action)
    pair.shared_buffer.append(StampedTransition(
        s=obs, a=action, r=res.reward, s_next=res.observation, done=res.success,
        episode=episode_id, step=step_idx, goal=goal, anchor=anchor, tag=idx))
    return state, res, ou


def se_collect_step(ensemble: SwitchingEnsemble, spec: envs.EnvSpec, state, obs,
                    schedule: SwitchSchedule, t: int, rng: np.random.Generator,
                    episode_id: int, step_idx: int, noise_std: float = 0.3,
                    warmup: bool = False):
    """One environment step of Switching Ensemble collection."""
    idx = next_agent(schedule, t, rng)
    if warmup:
        action = rng.uniform(-1.0, 1.0, ensemble.members[0].action_dim)
    else:
        action = td3_select_action(ensemble.members[idx], obs, noise_std, rng)
    state, res = envs.step(spec, state, action)
    ensemble.shared_buffer.append(StampedTransition(
        s=obs, a=action, r=res.reward, s_next=res.observation, done=res.success,
        episode=episode_id, step=step_idx, tag=idx))
    return state, res


def ee_train_step(pair: ExploreExploitPair, batch_size: int, c_rew: int,
                  rng: np.random.Generator):
    """Exploit trains on multi-step task rewards; explore trains on one-step
    intrinsic rewards recomputed against the stored goals."""
    exploit_losses = td3_train_step(
        pair.exploit, sample_nstep_batch(pair.shared_buffer, batch_size, c_rew, rng), rng)

    buf = pair.shared_buffer
    if isinstance(buf, StampedArrayBuffer):
        idx = buf.sample_indices(batch_size, rng)
        s = buf.column("s", idx)
        a = buf.column("a", idx)
        s_next = buf.column("s_next", idx)
        goal = buf.column("goal", idx)
        anchor = buf.column("anchor", idx)
        done = buf.column("done", idx).astype(float)
    else:
        recs = buf.sample(batch_size, rng)
        s = np.stack([r.s for r in recs])
        a = np.stack([r.a for r in recs])
        s_next = np.stack([r.s_next for r in recs])
        goal = np.stack([r.goal for r in recs])
        anchor = np.stack([r.anchor for r in recs])
        done = np.array([float(r.done) for r in recs])
    r_int = -np.linalg.norm(anchor + goal - s_next[:, :2], axis=1)
    batch = TD3Batch(
        s=low_features(s, goal, anchor),
        a=a,
        r_sum=r_int,
        s_next=low_features(s_next, goal, anchor),
        done=done,
        horizon=np.ones(batch_size),
    )
    explore_losses = td3_train_step(pair.explore, batch, rng)
    return exploit_losses, explore_losses


def se_train_step(ensemble: SwitchingEnsemble, batch_size: int, c_rew: int,
                  rng: np.random.Generator):
    """Every member takes one update from its own draw of the shared buffer."""
    return [td3_train_step(m, sample_nstep_batch(ensemble.shared_buffer, batch_size,
                                                 c_rew, rng), rng)
            for m in ensemble.members]
