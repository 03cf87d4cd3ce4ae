"""Episode collectors: run one episode with a given behavior policy and file
the experience into the right buffers.

All collectors store per-step records stamped with (episode, step) so window
samplers can rebuild consecutive multi-step spans later. Stored ``done``
flags mark task success only; running out the step budget truncates windows
(the trajectory simply ends) without suppressing the value bootstrap.
"""

from __future__ import annotations

import numpy as np

from . import envs, replay
from .agents_flat import AgentBundle, td3_select_action
from .agents_hrl import (GOAL_DIM, ExplorationFlags, GoalConditionedPair, OptionsSet,
                         act_hierarchy, intrinsic_reward)
from .replay import GoalTransition, ReplayBuffer, StampedTransition


def collect_episode_flat(bundle: AgentBundle, spec: envs.EnvSpec, noise_std: float,
                         env_rng, act_rng, buffer: ReplayBuffer, episode_id: int,
                         warmup: bool = False) -> int:
    """One episode under the bundle's noisy policy; returns its length."""
    state, obs = envs.reset(spec, env_rng)
    t = 0
    while True:
        if warmup:
            action = act_rng.uniform(bundle.action_low, bundle.action_high)
        else:
            action = td3_select_action(bundle, obs, noise_std, act_rng)
        state, res = envs.step(spec, state, action)
        buffer.append(StampedTransition(s=obs, a=action, r=res.reward,
                                        s_next=res.observation, done=res.success,
                                        episode=episode_id, step=t))
        obs = res.observation
        t += 1
        if res.done:
            return t


def collect_episode_goal(pair: GoalConditionedPair, spec: envs.EnvSpec,
                         flags: ExplorationFlags, env_rng, act_rng,
                         low_buffer: ReplayBuffer, high_buffer: ReplayBuffer,
                         episode_id: int, hindsight: bool = False,
                         log_windows: bool = False,
                         atomic_buffer: ReplayBuffer | None = None) -> int:
    """One episode under the two-level policy.

    Low-level records are goal-frozen before storage; with ``hindsight`` a
    relabeled copy (goal := the displacement actually achieved by the end of
    the window) is stored alongside each original. High-level records
    aggregate c_train rewards from each point where a goal was sampled.
    ``atomic_buffer`` optionally receives the plain environment transitions
    (for shadow training).
    """
    cfg = pair.cfg
    state, obs = envs.reset(spec, env_rng)
    hstate = None
    steps = []  # (obs, goal, anchor, action, reward, obs_next, done_store)
    while True:
        action, hstate = act_hierarchy(pair, obs, hstate, flags, act_rng)
        state, res = envs.step(spec, state, action)
        steps.append((obs, hstate.active_goal, hstate.anchor_xy, action,
                      res.reward, res.observation, res.success))
        obs = res.observation
        if res.done:
            break

    traj = [replay.Transition(s=s, a=a, r=r, s_next=s2, done=d)
            for s, g, an, a, r, s2, d in steps]
    if atomic_buffer is not None:
        for t, rec in enumerate(traj):
            atomic_buffer.append(StampedTransition(s=rec.s, a=rec.a, r=rec.r,
                                                   s_next=rec.s_next, done=rec.done,
                                                   episode=episode_id, step=t))

    # window boundaries: indices where a fresh goal was sampled
    starts = list(range(0, len(steps), cfg.c_expl))
    for w, t0 in enumerate(starts):
        t1 = min(t0 + cfg.c_expl, len(steps))  # window end (exclusive)
        goal, anchor = steps[t0][1], steps[t0][2]
        end_xy = steps[t1 - 1][5][:GOAL_DIM]
        achieved = np.asarray(end_xy, float) - np.asarray(anchor, float)
        for t in range(t0, t1):
            s, g, an, a, r, s2, d = steps[t]
            g_next = steps[t + 1][1] if t + 1 < len(steps) else g
            rec = GoalTransition(
                s=s, g=np.asarray(g, float), a=a,
                r_int=intrinsic_reward(an, g, s2[:GOAL_DIM]),
                s_next=s2, g_next=np.asarray(g_next, float), done=d,
                anchor_xy=np.asarray(an, float), next_xy=np.asarray(s2[:GOAL_DIM], float))
            frozen = replay.freeze_goal(rec)
            low_buffer.append(frozen)
            if hindsight:
                low_buffer.append(replay.hindsight_relabel(frozen, achieved))

        high = replay.aggregate_cstep(traj, t0, cfg.c_train, goal=np.asarray(goal, float))
        if log_windows:
            span = min(t1, t0 + cfg.c_train)
            high.states_window = [steps[t][0] for t in range(t0, span)]
            high.actions_window = [steps[t][3] for t in range(t0, span)]
        high_buffer.append(high)
    return len(steps)


def collect_episode_options(oset: OptionsSet, spec: envs.EnvSpec,
                            flags: ExplorationFlags, env_rng, act_rng,
                            step_buffer: ReplayBuffer, high_buffer: ReplayBuffer,
                            episode_id: int) -> int:
    """One episode under the options policy; per-step records are tagged with
    the active option so each option trains only on its own windows."""
    cfg = oset.cfg
    state, obs = envs.reset(spec, env_rng)
    hstate = None
    traj = []
    tags = []
    while True:
        action, hstate = act_hierarchy(oset, obs, hstate, flags, act_rng)
        state, res = envs.step(spec, state, action)
        traj.append(replay.Transition(s=obs, a=action, r=res.reward,
                                      s_next=res.observation, done=res.success))
        tags.append(int(hstate.active_goal))
        obs = res.observation
        if res.done:
            break

    for t, (rec, tag) in enumerate(zip(traj, tags)):
        step_buffer.append(StampedTransition(s=rec.s, a=rec.a, r=rec.r, s_next=rec.s_next,
                                             done=rec.done, episode=episode_id, step=t,
                                             tag=tag))
    for t0 in range(0, len(traj), cfg.c_expl):
        high_buffer.append(replay.aggregate_cstep(traj, t0, cfg.c_train, goal=tags[t0]))
    return len(traj)


def greedy_policy(agent, c_expl: int | None = None):
    """A fresh stateful action chooser for evaluation (no exploration)."""
    if isinstance(agent, AgentBundle):
        return lambda obs: td3_select_action(agent, obs, 0.0)
    flags = ExplorationFlags.greedy()
    hstate = {"v": None}

    def act(obs):
        action, hstate["v"] = act_hierarchy(agent, obs, hstate["v"], flags,
                                            rng=None, c_expl=c_expl)
        return action

    return act
