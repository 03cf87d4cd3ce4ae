"""Non-hierarchical agents: a TD3-style continuous-control learner with
configurable multi-step reward horizons, and a double-DQN discrete learner.

Networks are referenced through ``NetHead`` handles so that several logical
policies can alias different heads of one shared-trunk network (the combined
arm of the modularity ablation) while the training code stays identical.

The multi-step bootstrap discount defaults to gamma**horizon; a ``literal``
switch applies a single gamma factor regardless of the window length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import approx
from .replay import CStepTransition, NStep, StampedArrayBuffer, sample_nstep


@dataclass
class NetHead:
    """A view of one head of a network, padding inputs to the trunk width."""

    net: approx.Network
    head: int = 0
    pad_to: int | None = None

    def expand(self, x: np.ndarray) -> np.ndarray:
        width = self.pad_to or self.net.in_dim
        if width == x.shape[-1]:
            return x
        pad = [(0, 0)] * (x.ndim - 1) + [(0, width - x.shape[-1])]
        return np.pad(x, pad)

    def forward(self, x):
        return approx.forward(self.net, self.expand(np.asarray(x, float)), self.head)

    def gradient(self, x, upstream):
        return approx.gradient(self.net, self.expand(np.asarray(x, float)), upstream, self.head)

    def input_gradient(self, x, upstream):
        g = approx.input_gradient(self.net, self.expand(np.asarray(x, float)), upstream, self.head)
        return g[..., : x.shape[-1]]


@dataclass
class TD3Batch:
    """Stacked arrays for one TD3 training step."""

    s: np.ndarray
    a: np.ndarray
    r_sum: np.ndarray
    s_next: np.ndarray
    done: np.ndarray
    horizon: np.ndarray

    def __len__(self) -> int:
        return self.s.shape[0]


def nstep_batch(records: list[NStep]) -> TD3Batch:
    return TD3Batch(
        s=np.stack([r.s for r in records]).astype(float),
        a=np.stack([r.a for r in records]).astype(float),
        r_sum=np.array([r.r_sum for r in records], dtype=float),
        s_next=np.stack([r.s_next for r in records]).astype(float),
        done=np.array([float(r.done) for r in records]),
        horizon=np.array([r.horizon for r in records], dtype=float),
    )


def sample_nstep_batch(buffer, batch_size: int, n: int, rng: np.random.Generator) -> TD3Batch:
    """Uniform multi-step windows as a ready batch; array-backed buffers take
    the vectorized path."""
    if isinstance(buffer, StampedArrayBuffer):
        starts = buffer.sample_indices(batch_size, rng)
        return TD3Batch(*buffer.nstep_windows(starts, n))
    return nstep_batch(sample_nstep(buffer, batch_size, n, rng))


class AgentBundle:
    """Actor, twin critics, their target copies, and per-network Adam state.

    Action boxes are symmetric (low = -high); the actor squashes through a
    scaled tanh so emitted actions always satisfy the box.
    """

    def __init__(self, obs_dim, action_dim, action_scale=1.0, hidden=approx.DEFAULT_HIDDEN,
                 gamma=0.99, tau=0.005, policy_delay=2, smoothing_noise_std=0.2,
                 smoothing_noise_clip=0.5, learning_rate=3e-4, discount_exponent="horizon",
                 obs_scale=1.0, rng=None, nets=None):
        if rng is None and nets is None:
            raise ValueError("an rng is required to initialize networks")
        self.obs_dim = int(obs_dim)
        self.action_dim = int(action_dim)
        scale = np.broadcast_to(np.asarray(action_scale, float), (action_dim,)).copy()
        self.action_high = scale
        self.action_low = -scale
        self.gamma = gamma
        self.tau = tau
        self.policy_delay = int(policy_delay)
        self.smoothing_noise_std = smoothing_noise_std
        self.smoothing_noise_clip = smoothing_noise_clip
        self.discount_exponent = discount_exponent
        self.obs_scale = obs_scale
        self.update_counter = 0

        if nets is not None:
            # aliased heads of shared networks (combined-network ablation)
            (self.actor, self.critic1, self.critic2,
             self.target_actor, self.target_critic1, self.target_critic2,
             self.actor_adam, self.critic1_adam, self.critic2_adam) = nets
        else:
            hidden = tuple(hidden)
            actor_sizes = (obs_dim, *hidden, action_dim)
            critic_sizes = (obs_dim + action_dim, *hidden, 1)
            self.actor = NetHead(approx.build_network(
                actor_sizes, output_squash="tanh", output_scale=scale, rng=rng))
            self.critic1 = NetHead(approx.build_network(critic_sizes, rng=rng))
            self.critic2 = NetHead(approx.build_network(critic_sizes, rng=rng))
            self.target_actor = NetHead(approx.clone_network(self.actor.net))
            self.target_critic1 = NetHead(approx.clone_network(self.critic1.net))
            self.target_critic2 = NetHead(approx.clone_network(self.critic2.net))
            self.actor_adam = approx.init_adam(self.actor.net.params.size, learning_rate)
            self.critic1_adam = approx.init_adam(self.critic1.net.params.size, learning_rate)
            self.critic2_adam = approx.init_adam(self.critic2.net.params.size, learning_rate)

    def _obs(self, s: np.ndarray) -> np.ndarray:
        return s if self.obs_scale == 1.0 else s * self.obs_scale

    def policy(self, obs) -> np.ndarray:
        return self.actor.forward(self._obs(np.asarray(obs, float)))

    def networks(self):
        return {"actor": self.actor.net, "critic1": self.critic1.net, "critic2": self.critic2.net,
                "target_actor": self.target_actor.net, "target_critic1": self.target_critic1.net,
                "target_critic2": self.target_critic2.net}

    def param_checksum(self) -> float:
        return float(sum(n.params.sum() for n in self.networks().values()))


def td3_select_action(bundle: AgentBundle, obs, exploration_noise_std: float,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Greedy action plus Gaussian noise scaled by half the box width, clipped."""
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (bundle.obs_dim,):
        raise ValueError(f"obs has shape {obs.shape}, expected ({bundle.obs_dim},)")
    a = bundle.policy(obs)
    if exploration_noise_std > 0.0:
        if rng is None:
            raise ValueError("exploration noise requires an rng")
        half_width = (bundle.action_high - bundle.action_low) / 2.0
        a = a + rng.normal(0.0, exploration_noise_std * half_width)
    return np.clip(a, bundle.action_low, bundle.action_high)


def _discount_power(bundle, horizon: np.ndarray) -> np.ndarray:
    if bundle.discount_exponent == "literal":
        return np.full_like(horizon, bundle.gamma)
    return bundle.gamma**horizon


def td3_train_step(bundle: AgentBundle, batch: TD3Batch,
                   rng: np.random.Generator | None = None):
    """One clipped-double-Q critic update; every policy_delay-th call also
    updates the actor and tracks all targets. Returns (critic_loss, actor_loss)."""
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    s = bundle._obs(batch.s)
    s_next = bundle._obs(batch.s_next)

    a_next = bundle.target_actor.forward(s_next)
    if bundle.smoothing_noise_std > 0.0:
        if rng is None:
            raise ValueError("target smoothing noise requires an rng")
        half_width = (bundle.action_high - bundle.action_low) / 2.0
        noise = rng.normal(0.0, bundle.smoothing_noise_std, size=a_next.shape) * half_width
        noise = np.clip(noise, -bundle.smoothing_noise_clip * half_width,
                        bundle.smoothing_noise_clip * half_width)
        a_next = np.clip(a_next + noise, bundle.action_low, bundle.action_high)

    xin_next = np.concatenate([s_next, a_next], axis=1)
    q_next = np.minimum(bundle.target_critic1.forward(xin_next),
                        bundle.target_critic2.forward(xin_next))[:, 0]
    y = batch.r_sum + _discount_power(bundle, batch.horizon) * (1.0 - batch.done) * q_next

    xin = np.concatenate([s, batch.a], axis=1)
    critic_loss = 0.0
    for critic, adam in ((bundle.critic1, bundle.critic1_adam),
                         (bundle.critic2, bundle.critic2_adam)):
        err = critic.forward(xin)[:, 0] - y
        critic_loss += float(np.mean(err**2))
        grads = critic.gradient(xin, (2.0 / n) * err[:, None])
        critic.net.params = approx.adam_step(adam, critic.net.params, grads)
    critic_loss /= 2.0

    actor_loss = None
    bundle.update_counter += 1
    if bundle.update_counter % bundle.policy_delay == 0:
        a_pi = bundle.actor.forward(s)
        xin_pi = np.concatenate([s, a_pi], axis=1)
        actor_loss = -float(np.mean(bundle.critic1.forward(xin_pi)[:, 0]))
        dq_dx = bundle.critic1.input_gradient(xin_pi, np.full((n, 1), 1.0 / n))
        da = dq_dx[:, s.shape[1]:]
        grads = bundle.actor.gradient(s, -da)  # ascend Q
        bundle.actor.net.params = approx.adam_step(bundle.actor_adam, bundle.actor.net.params, grads)
        for tgt, src in ((bundle.target_actor, bundle.actor),
                         (bundle.target_critic1, bundle.critic1),
                         (bundle.target_critic2, bundle.critic2)):
            tgt.net.params = approx.polyak_update(tgt.net.params, src.net.params, bundle.tau)
    return critic_loss, actor_loss


def combined_bundles(dims, hidden, rng, learning_rate=3e-4, **bundle_kw) -> list[AgentBundle]:
    """Build one multi-head actor and twin-critic network shared by several
    logical agents (the combined arm of the modularity ablation).

    ``dims`` is a list of (obs_dim, action_dim, action_scale) per agent.
    Narrower inputs are zero-padded to the widest; each agent drives its own
    head, but the trunk is shared, so their updates interfere.
    """
    hidden = tuple(hidden)
    n = len(dims)
    actor_in = max(d[0] for d in dims)
    out_dim = max(d[1] for d in dims)
    critic_in = max(d[0] + d[1] for d in dims)
    scale = np.stack([np.full(out_dim, float(s)) for _, _, s in dims])
    actor = approx.build_network((actor_in, *hidden, out_dim), head_count=n,
                                 output_squash="tanh", output_scale=scale, rng=rng)
    critic1 = approx.build_network((critic_in, *hidden, 1), head_count=n, rng=rng)
    critic2 = approx.build_network((critic_in, *hidden, 1), head_count=n, rng=rng)
    t_actor = approx.clone_network(actor)
    t_c1 = approx.clone_network(critic1)
    t_c2 = approx.clone_network(critic2)
    adams = (approx.init_adam(actor.params.size, learning_rate),
             approx.init_adam(critic1.params.size, learning_rate),
             approx.init_adam(critic2.params.size, learning_rate))
    bundles = []
    for head, (obs_dim, action_dim, s) in enumerate(dims):
        nets = (NetHead(actor, head, actor_in), NetHead(critic1, head, critic_in),
                NetHead(critic2, head, critic_in), NetHead(t_actor, head, actor_in),
                NetHead(t_c1, head, critic_in), NetHead(t_c2, head, critic_in))
        bundles.append(AgentBundle(obs_dim, action_dim, action_scale=s,
                                   nets=nets + adams, **bundle_kw))
    return bundles


class DiscreteAgent:
    """Double-DQN learner over a finite action set, with epsilon-greedy behavior."""

    def __init__(self, obs_dim, n_actions, hidden=approx.DEFAULT_HIDDEN, epsilon=0.5,
                 gamma=0.99, tau=0.005, learning_rate=3e-4, discount_exponent="horizon",
                 obs_scale=1.0, rng=None):
        if rng is None:
            raise ValueError("an rng is required to initialize networks")
        self.obs_dim = int(obs_dim)
        self.n_actions = int(n_actions)
        self.epsilon = epsilon
        self.gamma = gamma
        self.tau = tau
        self.discount_exponent = discount_exponent
        self.obs_scale = obs_scale
        sizes = (obs_dim, *tuple(hidden), n_actions)
        self.q_net = approx.build_network(sizes, rng=rng)
        self.target_q_net = approx.clone_network(self.q_net)
        self.adam = approx.init_adam(self.q_net.params.size, learning_rate)

    def _obs(self, s):
        return s if self.obs_scale == 1.0 else s * self.obs_scale

    def q_values(self, obs) -> np.ndarray:
        return approx.forward(self.q_net, self._obs(np.asarray(obs, float)))

    def networks(self):
        return {"q_net": self.q_net, "target_q_net": self.target_q_net}

    def param_checksum(self) -> float:
        return float(self.q_net.params.sum() + self.target_q_net.params.sum())


def dqn_select_action(agent: DiscreteAgent, obs, rng: np.random.Generator,
                      epsilon: float | None = None) -> int:
    """Epsilon-greedy; ties resolve to the lowest index."""
    eps = agent.epsilon if epsilon is None else epsilon
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(agent.n_actions))
    return int(np.argmax(agent.q_values(obs)))


def dqn_batch_from_cstep(records: list[CStepTransition]):
    return (
        np.stack([r.s_t for r in records]).astype(float),
        np.array([int(r.g_t) for r in records]),
        np.array([r.r_sum for r in records], dtype=float),
        np.stack([r.s_t_plus_c for r in records]).astype(float),
        np.array([float(r.done) for r in records]),
        np.array([r.horizon for r in records], dtype=float),
    )


def dqn_train_step(agent: DiscreteAgent, records: list[CStepTransition]) -> float:
    """Double-DQN regression: bootstrap action chosen online, valued by the target."""
    if not records:
        raise ValueError("empty batch")
    s, act, r_sum, s_next, done, horizon = dqn_batch_from_cstep(records)
    if np.any(act < 0) or np.any(act >= agent.n_actions):
        raise ValueError("action index out of range")
    n = len(records)
    s = agent._obs(s)
    s_next = agent._obs(s_next)

    best_next = np.argmax(approx.forward(agent.q_net, s_next), axis=1)
    q_next = approx.forward(agent.target_q_net, s_next)[np.arange(n), best_next]
    if agent.discount_exponent == "literal":
        disc = np.full(n, agent.gamma)
    else:
        disc = agent.gamma**horizon
    y = r_sum + disc * (1.0 - done) * q_next

    q_all = approx.forward(agent.q_net, s)
    err = q_all[np.arange(n), act] - y
    upstream = np.zeros_like(q_all)
    upstream[np.arange(n), act] = (2.0 / n) * err
    grads = approx.gradient(agent.q_net, s, upstream)
    agent.q_net.params = approx.adam_step(agent.adam, agent.q_net.params, grads)
    agent.target_q_net.params = approx.polyak_update(
        agent.target_q_net.params, agent.q_net.params, agent.tau)
    return float(np.mean(err**2))
