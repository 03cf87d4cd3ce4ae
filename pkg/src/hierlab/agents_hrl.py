"""Two-level agents: a goal-conditioned hierarchy (optionally with hindsight
goal relabeling) and an options agent (m reward-maximizing low-level policies
under a discrete high level).

Goals are x,y displacements from the agent position at the moment the goal
was set (the anchor). The low level is fed the remaining displacement
``anchor + goal - current_xy`` next to the raw observation, which keeps its
input Markov while the stored goal stays constant across the window. The
collection horizon (how often a new high-level action is sampled) and the
training horizon (how many rewards a high-level record aggregates) are
independent knobs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import approx, replay
from .agents_flat import (AgentBundle, DiscreteAgent, NetHead, TD3Batch,
                          dqn_select_action, dqn_train_step, nstep_batch,
                          td3_select_action, td3_train_step)
from .replay import CStepTransition, GoalTransition

GOAL_DIM = 2
DEFAULT_GOAL_SCALE = 2.0


@dataclass
class HrlConfig:
    c_train: int = 10
    c_expl: int = 10
    goal_scale: float = DEFAULT_GOAL_SCALE  # goal box is [-scale, scale]^2
    paradigm: str = "GoalConditioned"  # GoalConditioned | GoalConditionedHindsight | Options
    m: int = 5
    low_level_nstep: int = 3

    def __post_init__(self):
        if self.c_train < 1 or self.c_expl < 1:
            raise ValueError("horizons must be >= 1")
        if not np.isfinite(self.goal_scale) or self.goal_scale <= 0:
            raise ValueError("goal bounds must be finite and positive")
        if self.paradigm not in ("GoalConditioned", "GoalConditionedHindsight", "Options"):
            raise ValueError(f"unknown paradigm {self.paradigm!r}")


@dataclass
class HierarchyState:
    active_goal: object  # goal vector, or option index
    anchor_xy: np.ndarray
    steps_since_goal: int


@dataclass
class ExplorationFlags:
    high_noise_std: float = 0.0
    low_noise_std: float = 0.0
    epsilon: float = 0.0
    warmup: bool = False  # uniform-random high and low actions

    @classmethod
    def greedy(cls):
        return cls()


class GoalConditionedPair:
    """High level proposes displacement goals; low level chases them."""

    def __init__(self, obs_dim, action_dim, cfg: HrlConfig, hidden, rng, obs_scale=1.0,
                 learning_rate=3e-4, gamma=0.99, combined=False, **bundle_kw):
        self.cfg = cfg
        self.obs_dim = obs_dim
        if combined:
            self.high, self.low = _combined_goal_pair(
                obs_dim, action_dim, cfg, hidden, rng, obs_scale=obs_scale,
                learning_rate=learning_rate, gamma=gamma, **bundle_kw)
        else:
            self.high = AgentBundle(obs_dim, GOAL_DIM, action_scale=cfg.goal_scale,
                                    hidden=hidden, rng=rng, obs_scale=obs_scale,
                                    learning_rate=learning_rate, gamma=gamma, **bundle_kw)
            self.low = AgentBundle(obs_dim + GOAL_DIM, action_dim, hidden=hidden, rng=rng,
                                   obs_scale=obs_scale, learning_rate=learning_rate,
                                   gamma=gamma, **bundle_kw)

    def networks(self):
        out = {}
        for prefix, bundle in (("high", self.high), ("low", self.low)):
            for name, net in bundle.networks().items():
                out[f"{prefix}.{name}"] = net
        return out

    def param_checksum(self):
        return self.high.param_checksum() + self.low.param_checksum()


class OptionsSet:
    """m independent low-level bundles selected by a discrete double-DQN high level."""

    def __init__(self, obs_dim, action_dim, cfg: HrlConfig, hidden, rng, obs_scale=1.0,
                 learning_rate=3e-4, gamma=0.99, epsilon=0.5, **bundle_kw):
        self.cfg = cfg
        self.options = [AgentBundle(obs_dim, action_dim, hidden=hidden, rng=rng,
                                    obs_scale=obs_scale, learning_rate=learning_rate,
                                    gamma=gamma, **bundle_kw)
                        for _ in range(cfg.m)]
        self.high = DiscreteAgent(obs_dim, cfg.m, hidden=hidden, epsilon=epsilon,
                                  gamma=gamma, learning_rate=learning_rate,
                                  obs_scale=obs_scale, rng=rng)

    def networks(self):
        out = {f"high.{k}": v for k, v in self.high.networks().items()}
        for i, opt in enumerate(self.options):
            for name, net in opt.networks().items():
                out[f"option{i}.{name}"] = net
        return out

    def param_checksum(self):
        return self.high.param_checksum() + sum(o.param_checksum() for o in self.options)


def _combined_goal_pair(obs_dim, action_dim, cfg, hidden, rng, obs_scale, learning_rate,
                        gamma, **bundle_kw):
    """Single multi-head actor/critic networks shared by both levels.

    Head 0 serves the high level (input padded), head 1 the low level. Trunk
    parameters are shared, so updates through one level leak into the other;
    that interference is exactly what the modularity ablation measures.
    """
    hidden = tuple(hidden)
    actor_in = obs_dim + GOAL_DIM
    critic_in = obs_dim + GOAL_DIM + max(GOAL_DIM, action_dim)
    out_dim = max(GOAL_DIM, action_dim)
    scale = np.stack([
        np.full(out_dim, cfg.goal_scale),
        np.ones(out_dim),
    ])
    actor = approx.build_network((actor_in, *hidden, out_dim), head_count=2,
                                 output_squash="tanh", output_scale=scale, rng=rng)
    critic1 = approx.build_network((critic_in, *hidden, 1), head_count=2, rng=rng)
    critic2 = approx.build_network((critic_in, *hidden, 1), head_count=2, rng=rng)
    t_actor = approx.clone_network(actor)
    t_c1 = approx.clone_network(critic1)
    t_c2 = approx.clone_network(critic2)
    adam_a = approx.init_adam(actor.params.size, learning_rate)
    adam_1 = approx.init_adam(critic1.params.size, learning_rate)
    adam_2 = approx.init_adam(critic2.params.size, learning_rate)

    def bundle(head, in_dim, a_dim, a_scale):
        nets = (NetHead(actor, head, actor_in), NetHead(critic1, head, critic_in),
                NetHead(critic2, head, critic_in), NetHead(t_actor, head, actor_in),
                NetHead(t_c1, head, critic_in), NetHead(t_c2, head, critic_in))
        adams = (adam_a, adam_1, adam_2)
        b = AgentBundle(in_dim, a_dim, action_scale=a_scale, nets=nets + adams,
                        obs_scale=obs_scale, gamma=gamma, **bundle_kw)
        return b

    high = bundle(0, obs_dim, GOAL_DIM, cfg.goal_scale)
    low = bundle(1, obs_dim + GOAL_DIM, action_dim, 1.0)
    return high, low


def intrinsic_reward(anchor_xy, goal, next_xy) -> float:
    """Negative Euclidean distance between the commanded point and where the
    agent ended up."""
    return replay.intrinsic_reward_value(anchor_xy, goal, next_xy)


def low_features(obs, goal, anchor) -> np.ndarray:
    """Observation plus the remaining displacement to the commanded point."""
    obs = np.asarray(obs, float)
    goal = np.asarray(goal, float)
    anchor = np.asarray(anchor, float)
    if obs.ndim == 1:
        return np.concatenate([obs, anchor + goal - obs[:GOAL_DIM]])
    return np.concatenate([obs, anchor + goal - obs[:, :GOAL_DIM]], axis=1)


def act_hierarchy(agent, obs, hstate: HierarchyState | None, flags: ExplorationFlags,
                  rng: np.random.Generator, c_expl: int | None = None):
    """One hierarchical action: resample the high-level action when the window
    counter wraps, then let the active low level pick the atomic action."""
    cfg = agent.cfg
    c = cfg.c_expl if c_expl is None else c_expl
    obs = np.asarray(obs, float)

    if hstate is None or hstate.steps_since_goal == 0:
        anchor = obs[:GOAL_DIM].copy()
        if isinstance(agent, OptionsSet):
            if flags.warmup:
                g = int(rng.integers(cfg.m))
            else:
                g = dqn_select_action(agent.high, obs, rng, epsilon=flags.epsilon)
        else:
            if flags.warmup:
                g = rng.uniform(-cfg.goal_scale, cfg.goal_scale, GOAL_DIM)
            else:
                g = td3_select_action(agent.high, obs, flags.high_noise_std, rng)
        hstate = HierarchyState(active_goal=g, anchor_xy=anchor, steps_since_goal=0)

    if isinstance(agent, OptionsSet):
        bundle = agent.options[hstate.active_goal]
        if flags.warmup:
            action = rng.uniform(bundle.action_low, bundle.action_high)
        else:
            action = td3_select_action(bundle, obs, flags.low_noise_std, rng)
    else:
        feats = low_features(obs, hstate.active_goal, hstate.anchor_xy)
        if flags.warmup:
            action = rng.uniform(agent.low.action_low, agent.low.action_high)
        else:
            action = td3_select_action(agent.low, feats, flags.low_noise_std, rng)

    new_state = HierarchyState(active_goal=hstate.active_goal, anchor_xy=hstate.anchor_xy,
                               steps_since_goal=(hstate.steps_since_goal + 1) % c)
    return action, new_state


def low_level_train_step_goal(pair: GoalConditionedPair, batch: list[GoalTransition],
                              rng: np.random.Generator | None = None):
    """TD3 update of the low level on frozen-goal records."""
    if not batch:
        raise ValueError("empty batch")
    s = np.stack([r.s for r in batch])
    g = np.stack([r.g for r in batch])
    anchor = np.stack([r.anchor_xy for r in batch])
    s_next = np.stack([r.s_next for r in batch])
    g_next = np.stack([r.g_next for r in batch])
    if not np.array_equal(g, g_next):
        raise ValueError("unfrozen batch: a record has g_next != g")
    td3 = TD3Batch(
        s=low_features(s, g, anchor),
        a=np.stack([r.a for r in batch]),
        r_sum=np.array([r.r_int for r in batch], dtype=float),
        s_next=low_features(s_next, g_next, anchor),
        done=np.array([float(r.done) for r in batch]),
        horizon=np.ones(len(batch)),
    )
    return td3_train_step(pair.low, td3, rng)


def low_level_train_step_options(oset: OptionsSet, option_index: int, batch,
                                 rng: np.random.Generator | None = None):
    """TD3 update of one option on its own multi-step environment-reward
    records (a list of NStep records or a prepared TD3Batch)."""
    if not 0 <= option_index < oset.cfg.m:
        raise ValueError(f"option index {option_index} out of range")
    td3 = batch if isinstance(batch, TD3Batch) else nstep_batch(batch)
    if len(td3) == 0:
        raise ValueError("empty batch")
    return td3_train_step(oset.options[option_index], td3, rng)


def high_level_train_step(agent, batch: list[CStepTransition], c_train: int,
                          rng: np.random.Generator | None = None):
    """Train the high level on aggregated records built with horizon ``c_train``."""
    if not batch:
        raise ValueError("empty batch")
    for rec in batch:
        if rec.horizon > c_train:
            raise ValueError(f"record aggregated over {rec.horizon} steps, config says {c_train}")
    if isinstance(agent, OptionsSet):
        return dqn_train_step(agent.high, batch)
    td3 = TD3Batch(
        s=np.stack([r.s_t for r in batch]),
        a=np.stack([np.asarray(r.g_t, dtype=float) for r in batch]),
        r_sum=np.array([r.r_sum for r in batch], dtype=float),
        s_next=np.stack([r.s_t_plus_c for r in batch]),
        done=np.array([float(r.done) for r in batch]),
        horizon=np.array([r.horizon for r in batch], dtype=float),
    )
    return td3_train_step(agent.high, td3, rng)


def hiro_offpolicy_relabel(record: CStepTransition, pair: GoalConditionedPair,
                           rng: np.random.Generator, n_candidates: int = 10,
                           width: float | None = None) -> CStepTransition:
    """Replace the stored goal by the candidate under which the current low
    level would most plausibly have produced the logged atomic actions.

    Candidates: the original goal, the achieved displacement, and Gaussian
    samples around the achieved displacement, all clipped to the goal box.
    Ties keep the earliest candidate, so an exact original match is retained.
    """
    if record.states_window is None or record.actions_window is None:
        raise ValueError("record carries no logged low-level window")
    scale = pair.cfg.goal_scale
    if width is None:
        width = scale / 2.0
    anchor = np.asarray(record.states_window[0][:GOAL_DIM], float)
    achieved = np.asarray(record.s_t_plus_c[:GOAL_DIM], float) - anchor
    cands = [np.asarray(record.g_t, float), achieved]
    for _ in range(n_candidates - 2):
        cands.append(np.clip(achieved + rng.normal(0.0, width, GOAL_DIM), -scale, scale))

    states = np.stack([np.asarray(s, float) for s in record.states_window])
    actions = np.stack([np.asarray(a, float) for a in record.actions_window])
    best, best_score = None, -np.inf
    for g in cands:
        feats = low_features(states, np.broadcast_to(g, (len(states), GOAL_DIM)),
                             np.broadcast_to(anchor, (len(states), GOAL_DIM)))
        pred = pair.low.actor.forward(pair.low._obs(feats))
        score = -float(np.sum((pred - actions) ** 2))
        if score > best_score:
            best, best_score = g, score
    return dataclasses.replace(record, g_t=best)
