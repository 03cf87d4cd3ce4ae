"""Experiment orchestration: declarative configs, seeded deterministic runs,
the collect/train/eval loop, axis sweeps, CSV emission and SVG curve plots.

One master seed fully determines a run: every consumer draws from its own
named substream, so the emitted CSV is byte-reproducible. Wall-clock timing
is therefore written as 0 unless ``record_timing`` is set (real timing breaks
byte-for-byte reproducibility; the measured value is still returned on the
in-memory records).
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import envs, explore, rollouts, shadow as shadow_mod
from .agents_flat import (AgentBundle, TD3Batch, combined_bundles, sample_nstep_batch,
                          td3_train_step)
from .agents_hrl import (ExplorationFlags, GoalConditionedPair, HrlConfig, OptionsSet,
                         high_level_train_step, hiro_offpolicy_relabel,
                         low_level_train_step_goal, low_level_train_step_options)
from .approx import load_params, save_params
from .replay import ReplayBuffer, StampedArrayBuffer
from .rngs import substream

METHODS = ("Flat", "FlatNStep", "GoalHRL", "GoalHRLHindsight", "Options", "Shadow",
           "ExploreExploit", "SwitchingEnsemble")
_COMBINABLE = ("GoalHRL", "GoalHRLHindsight", "ExploreExploit", "SwitchingEnsemble")

CSV_HEADER = "seed,env_step,success_rate,mean_return,wall_clock_seconds"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    task: str = "MazeDesk"
    method: str = "Flat"
    c_train: int = 10
    c_expl: int = 10
    c_rew: int = 3
    c_switch: int = 10
    combined_networks: bool = False
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    total_env_steps: int = 300_000
    eval_every: int = 10_000
    eval_episodes: int = 20
    env_steps_per_train_step: int = 2
    output_dir: str = "runs"
    # agent hyperparameters (desk-scale defaults; all overridable)
    hidden_sizes: list = field(default_factory=lambda: [64, 64])
    batch_size: int = 120  # divisible by 10 so the 70/30 shadow split is exact
    learning_rate: float = 1e-3
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    expl_noise: float = 0.3
    epsilon: float = 0.5
    goal_scale: float = 2.0
    m_options: int = 5
    low_level_nstep: int = 3
    ensemble_size: int = 5
    ee_weights: list = field(default_factory=lambda: [0.2, 0.8])
    ou_sigma: float = 2.0  # the goal-box halfwidth; smaller spreads cannot
    ou_damping: float = 0.8  # push excursions past the slab at desk scale
    ou_form: str = "subtract"
    mix_fraction: float = 0.7
    warmup_steps: int = 2_000
    buffer_capacity: int = 1_000_000
    discount_exponent: str = "horizon"
    offpolicy_relabel: bool = False
    obs_scale: float = 0.25  # observations arrive in arena units; nets see them /4
    early_stop_success: float | None = None
    record_timing: bool = False
    workers: int = 1
    save_checkpoints: bool = True


@dataclass
class EvalRecord:
    seed: int
    env_step: int
    success_rate: float
    mean_return: float
    wall_clock_seconds: float


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name: str, value):
    want = {
        "task": str, "method": str, "output_dir": str, "ou_form": str,
        "discount_exponent": str,
        "combined_networks": bool, "offpolicy_relabel": bool, "record_timing": bool,
        "save_checkpoints": bool,
        "seeds": list, "hidden_sizes": list, "ee_weights": list,
        "learning_rate": float, "gamma": float, "tau": float, "expl_noise": float,
        "epsilon": float, "goal_scale": float, "ou_sigma": float, "ou_damping": float,
        "mix_fraction": float, "obs_scale": float,
    }.get(name, int)
    if name == "early_stop_success":
        if value is None:
            return None
        want = float
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"field '{name}': expected a boolean, got {value!r}")
        return value
    if want is list:
        if not isinstance(value, list):
            raise ConfigError(f"field '{name}': expected a list, got {value!r}")
        return value
    if want in (int, float) and isinstance(value, bool):
        raise ConfigError(f"field '{name}': expected a number, got {value!r}")
    try:
        out = want(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}': cannot read {value!r} as {want.__name__}")
    if want is int and float(value) != out:
        raise ConfigError(f"field '{name}': expected an integer, got {value!r}")
    return out


def load_config(source) -> ExperimentConfig:
    """Parse a config from a JSON file path or a JSON string."""
    text = source
    try:
        path = Path(str(source))
        is_file = path.suffix == ".json" or path.exists()
    except OSError:  # e.g. literal JSON long enough to overflow a filename
        is_file = False
    if is_file:
        text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    kwargs = {}
    for key, value in raw.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key '{key}'")
        kwargs[key] = _coerce(key, value)
    cfg = ExperimentConfig(**kwargs)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.task not in envs.TASKS:
        raise ConfigError(f"field 'task': unknown task {cfg.task!r}")
    if cfg.method not in METHODS:
        raise ConfigError(f"field 'method': unknown method {cfg.method!r}; "
                          f"expected one of {METHODS}")
    for name in ("c_train", "c_expl", "c_rew", "c_switch", "eval_episodes",
                 "env_steps_per_train_step", "batch_size", "m_options",
                 "low_level_nstep", "ensemble_size", "buffer_capacity", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"field '{name}': must be >= 1, got {getattr(cfg, name)}")
    for name in ("total_env_steps", "warmup_steps"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"field '{name}': must be >= 0")
    if cfg.eval_every < 1:
        raise ConfigError("field 'eval_every': must be >= 1")
    if not cfg.seeds:
        raise ConfigError("field 'seeds': need at least one seed")
    if not all(isinstance(s, int) for s in cfg.seeds):
        raise ConfigError("field 'seeds': entries must be integers")
    if cfg.combined_networks and cfg.method not in _COMBINABLE:
        raise ConfigError(f"field 'combined_networks': method {cfg.method} has a single "
                          "policy, nothing to combine")
    if not 0.0 <= cfg.mix_fraction <= 1.0:
        raise ConfigError("field 'mix_fraction': must lie in [0, 1]")
    if len(cfg.ee_weights) != 2 or abs(sum(cfg.ee_weights) - 1.0) > 1e-9:
        raise ConfigError("field 'ee_weights': need two probabilities summing to 1")
    if cfg.discount_exponent not in ("horizon", "literal"):
        raise ConfigError("field 'discount_exponent': expected 'horizon' or 'literal'")
    if cfg.ou_form not in ("subtract", "retain"):
        raise ConfigError("field 'ou_form': expected 'subtract' or 'retain'")
    if cfg.method == "Shadow":
        exact = cfg.batch_size * cfg.mix_fraction
        if abs(exact - round(exact)) > 1e-9:
            raise ConfigError("field 'batch_size': batch_size * mix_fraction = "
                              f"{exact} must be an integer for exact mixed batches")


def serialize_config(cfg: ExperimentConfig) -> str:
    return json.dumps(dataclasses.asdict(cfg), sort_keys=True)


def output_dir(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get("HIERLAB_OUT", cfg.output_dir))


# ---------------------------------------------------------------------------
# method adapters: collect_episode / train_step / policy_factory / networks
# ---------------------------------------------------------------------------


class _Run:
    """Per-seed state shared by every method adapter."""

    def __init__(self, cfg: ExperimentConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.spec = envs.make_spec(cfg.task)
        self.env_rng = substream(seed, "env")
        self.act_rng = substream(seed, "act")
        self.train_rng = substream(seed, "train")
        self.episodes = 0
        self.env_steps = 0

    def bundle_kw(self):
        cfg = self.cfg
        return dict(hidden=tuple(cfg.hidden_sizes), gamma=cfg.gamma, tau=cfg.tau,
                    policy_delay=cfg.policy_delay, learning_rate=cfg.learning_rate,
                    discount_exponent=cfg.discount_exponent, obs_scale=cfg.obs_scale)

    @property
    def warmup(self) -> bool:
        return self.env_steps < self.cfg.warmup_steps

    def ready(self, buffer) -> bool:
        return len(buffer) >= self.cfg.batch_size


class FlatAdapter(_Run):
    def __init__(self, cfg, seed):
        super().__init__(cfg, seed)
        self.c_rew = 1 if cfg.method == "Flat" else cfg.c_rew
        self.agent = AgentBundle(self.spec.obs_dim, 2, rng=substream(seed, "init"),
                                 **self.bundle_kw())
        self.buffer = StampedArrayBuffer(cfg.buffer_capacity)

    def collect_episode(self) -> int:
        n = rollouts.collect_episode_flat(self.agent, self.spec, self.cfg.expl_noise,
                                          self.env_rng, self.act_rng, self.buffer,
                                          self.episodes, warmup=self.warmup)
        self.episodes += 1
        self.env_steps += n
        return n

    def train_step(self) -> None:
        if self.ready(self.buffer):
            batch = sample_nstep_batch(self.buffer, self.cfg.batch_size, self.c_rew,
                                       self.train_rng)
            td3_train_step(self.agent, batch, self.train_rng)

    def policy_factory(self, eval_rng):
        return lambda: rollouts.greedy_policy(self.agent)

    def networks(self):
        return {f"agent.{k}": v for k, v in self.agent.networks().items()}


class GoalHrlAdapter(_Run):
    def __init__(self, cfg, seed):
        super().__init__(cfg, seed)
        hrl_cfg = HrlConfig(c_train=cfg.c_train, c_expl=cfg.c_expl,
                            goal_scale=cfg.goal_scale,
                            paradigm="GoalConditionedHindsight"
                            if cfg.method == "GoalHRLHindsight" else "GoalConditioned")
        self.pair = GoalConditionedPair(self.spec.obs_dim, 2, hrl_cfg,
                                        rng=substream(seed, "init"),
                                        combined=cfg.combined_networks, **self.bundle_kw())
        self.low_buffer = ReplayBuffer(cfg.buffer_capacity)
        self.high_buffer = ReplayBuffer(cfg.buffer_capacity)
        self.hindsight = cfg.method == "GoalHRLHindsight"

    def collect_episode(self) -> int:
        flags = ExplorationFlags(high_noise_std=self.cfg.expl_noise,
                                 low_noise_std=self.cfg.expl_noise, warmup=self.warmup)
        n = rollouts.collect_episode_goal(self.pair, self.spec, flags, self.env_rng,
                                          self.act_rng, self.low_buffer, self.high_buffer,
                                          self.episodes, hindsight=self.hindsight,
                                          log_windows=self.cfg.offpolicy_relabel)
        self.episodes += 1
        self.env_steps += n
        return n

    def train_step(self) -> None:
        if self.ready(self.low_buffer):
            low_level_train_step_goal(self.pair,
                                      self.low_buffer.sample(self.cfg.batch_size,
                                                             self.train_rng),
                                      self.train_rng)
        if self.ready(self.high_buffer):
            batch = self.high_buffer.sample(self.cfg.batch_size, self.train_rng)
            if self.cfg.offpolicy_relabel:
                batch = [hiro_offpolicy_relabel(r, self.pair, self.train_rng)
                         for r in batch]
            high_level_train_step(self.pair, batch, self.cfg.c_train, self.train_rng)

    def policy_factory(self, eval_rng):
        return lambda: rollouts.greedy_policy(self.pair, c_expl=self.cfg.c_expl)

    def networks(self):
        return self.pair.networks()


class OptionsAdapter(_Run):
    def __init__(self, cfg, seed):
        super().__init__(cfg, seed)
        hrl_cfg = HrlConfig(c_train=cfg.c_train, c_expl=cfg.c_expl, paradigm="Options",
                            m=cfg.m_options, low_level_nstep=cfg.low_level_nstep)
        self.oset = OptionsSet(self.spec.obs_dim, 2, hrl_cfg, rng=substream(seed, "init"),
                               epsilon=cfg.epsilon, **self.bundle_kw())
        self.step_buffer = StampedArrayBuffer(cfg.buffer_capacity)
        self.high_buffer = ReplayBuffer(cfg.buffer_capacity)
        self._round_robin = 0

    def collect_episode(self) -> int:
        flags = ExplorationFlags(epsilon=self.cfg.epsilon,
                                 low_noise_std=self.cfg.expl_noise, warmup=self.warmup)
        n = rollouts.collect_episode_options(self.oset, self.spec, flags, self.env_rng,
                                             self.act_rng, self.step_buffer,
                                             self.high_buffer, self.episodes)
        self.episodes += 1
        self.env_steps += n
        return n

    def _tagged_starts(self, tag: int):
        """Uniform window starts carrying the given option tag (rejection)."""
        want = self.cfg.batch_size
        got = []
        for _ in range(60):
            idx = self.step_buffer.sample_indices(4 * want, self.train_rng)
            hits = idx[self.step_buffer.column("tag", idx) == tag]
            got.extend(int(i) for i in hits[: want - len(got)])
            if len(got) == want:
                return np.asarray(got)
        return np.asarray(got) if got else None

    def train_step(self) -> None:
        if self.ready(self.high_buffer):
            high_level_train_step(self.oset,
                                  self.high_buffer.sample(self.cfg.batch_size,
                                                          self.train_rng),
                                  self.cfg.c_train, self.train_rng)
        if self.ready(self.step_buffer):
            tag = self._round_robin % self.oset.cfg.m
            self._round_robin += 1
            starts = self._tagged_starts(tag)
            if starts is not None:
                arrays = self.step_buffer.nstep_windows(starts, self.cfg.low_level_nstep,
                                                        same_tag=True)
                low_level_train_step_options(self.oset, tag, TD3Batch(*arrays),
                                             self.train_rng)

    def policy_factory(self, eval_rng):
        return lambda: rollouts.greedy_policy(self.oset, c_expl=self.cfg.c_expl)

    def networks(self):
        return self.oset.networks()


class ExploreExploitAdapter(_Run):
    def __init__(self, cfg, seed):
        super().__init__(cfg, seed)
        init = substream(seed, "init")
        kw = self.bundle_kw()
        if cfg.combined_networks:
            exploit, explore_agent = combined_bundles(
                [(self.spec.obs_dim, 2, 1.0), (self.spec.obs_dim + 2, 2, 1.0)],
                tuple(cfg.hidden_sizes), init, learning_rate=cfg.learning_rate,
                gamma=cfg.gamma, tau=cfg.tau, policy_delay=cfg.policy_delay,
                discount_exponent=cfg.discount_exponent, obs_scale=cfg.obs_scale)
        else:
            exploit = AgentBundle(self.spec.obs_dim, 2, rng=init, **kw)
            explore_agent = AgentBundle(self.spec.obs_dim + 2, 2, rng=init, **kw)
        self.pair = explore.ExploreExploitPair(
            exploit, explore_agent, StampedArrayBuffer(cfg.buffer_capacity),
            goal_scale=cfg.goal_scale, ou_sigma=cfg.ou_sigma, ou_damping=cfg.ou_damping,
            ou_form=cfg.ou_form, weights=(cfg.ee_weights[0], cfg.ee_weights[1]))

    def collect_episode(self) -> int:
        cfg = self.cfg
        state, obs = envs.reset(self.spec, self.env_rng)
        ou = explore.ou_init(sigma=cfg.ou_sigma, damping=cfg.ou_damping, form=cfg.ou_form)
        sched = explore.SwitchSchedule(cfg.c_switch, self.pair.weights)
        t = 0
        while True:
            state, res, ou = explore.ee_collect_step(
                self.pair, self.spec, state, obs, ou, sched, t, self.act_rng,
                self.episodes, t, noise_std=cfg.expl_noise, warmup=self.warmup)
            obs = res.observation
            t += 1
            if res.done:
                break
        self.episodes += 1
        self.env_steps += t
        return t

    def train_step(self) -> None:
        if self.ready(self.pair.shared_buffer):
            explore.ee_train_step(self.pair, self.cfg.batch_size, self.cfg.c_rew,
                                  self.train_rng)

    def policy_factory(self, eval_rng):
        return lambda: rollouts.greedy_policy(self.pair.exploit)

    def networks(self):
        out = {f"exploit.{k}": v for k, v in self.pair.exploit.networks().items()}
        out.update({f"explore.{k}": v for k, v in self.pair.explore.networks().items()})
        return out


class SwitchingEnsembleAdapter(_Run):
    def __init__(self, cfg, seed):
        super().__init__(cfg, seed)
        init = substream(seed, "init")
        if cfg.combined_networks:
            members = combined_bundles(
                [(self.spec.obs_dim, 2, 1.0)] * cfg.ensemble_size,
                tuple(cfg.hidden_sizes), init, learning_rate=cfg.learning_rate,
                gamma=cfg.gamma, tau=cfg.tau, policy_delay=cfg.policy_delay,
                discount_exponent=cfg.discount_exponent, obs_scale=cfg.obs_scale)
        else:
            members = [AgentBundle(self.spec.obs_dim, 2, rng=init, **self.bundle_kw())
                       for _ in range(cfg.ensemble_size)]
        self.ensemble = explore.SwitchingEnsemble(members,
                                                  StampedArrayBuffer(cfg.buffer_capacity))

    def collect_episode(self) -> int:
        cfg = self.cfg
        state, obs = envs.reset(self.spec, self.env_rng)
        sched = explore.SwitchSchedule(cfg.c_switch,
                                       np.full(cfg.ensemble_size, 1.0 / cfg.ensemble_size))
        t = 0
        while True:
            state, res = explore.se_collect_step(
                self.ensemble, self.spec, state, obs, sched, t, self.act_rng,
                self.episodes, t, noise_std=cfg.expl_noise, warmup=self.warmup)
            obs = res.observation
            t += 1
            if res.done:
                break
        self.episodes += 1
        self.env_steps += t
        return t

    def train_step(self) -> None:
        if self.ready(self.ensemble.shared_buffer):
            explore.se_train_step(self.ensemble, self.cfg.batch_size, self.cfg.c_rew,
                                  self.train_rng)

    def policy_factory(self, eval_rng):
        # each evaluation episode is run by one uniformly drawn member
        def factory():
            member = self.ensemble.members[int(eval_rng.integers(len(self.ensemble.members)))]
            return rollouts.greedy_policy(member)
        return factory

    def networks(self):
        out = {}
        for i, m in enumerate(self.ensemble.members):
            out.update({f"member{i}.{k}": v for k, v in m.networks().items()})
        return out


class ShadowAdapter(_Run):
    def __init__(self, cfg, seed):
        super().__init__(cfg, seed)
        hrl_cfg = HrlConfig(c_train=cfg.c_train, c_expl=cfg.c_expl,
                            goal_scale=cfg.goal_scale)
        pair = GoalConditionedPair(self.spec.obs_dim, 2, hrl_cfg,
                                   rng=substream(seed, "init"), **self.bundle_kw())
        flat = AgentBundle(self.spec.obs_dim, 2, rng=substream(seed, "init-shadow"),
                           **self.bundle_kw())
        self.rig = shadow_mod.ShadowRig(pair, flat, mix_fraction=cfg.mix_fraction,
                                        c_rew=cfg.c_rew, buffer_capacity=cfg.buffer_capacity)

    def collect_episode(self) -> int:
        flags = ExplorationFlags(high_noise_std=self.cfg.expl_noise,
                                 low_noise_std=self.cfg.expl_noise, warmup=self.warmup)
        n = self.rig.collect(self.spec, flags, self.cfg.expl_noise, self.env_rng,
                             self.act_rng, warmup=self.warmup)
        self.episodes += 1
        self.env_steps += n
        return n

    def train_step(self) -> None:
        cfg = self.cfg
        rig = self.rig
        if self.ready(rig.hrl_low_buffer):
            low_level_train_step_goal(rig.hrl, rig.hrl_low_buffer.sample(cfg.batch_size,
                                                                         self.train_rng),
                                      self.train_rng)
        if self.ready(rig.hrl_high_buffer):
            high_level_train_step(rig.hrl, rig.hrl_high_buffer.sample(cfg.batch_size,
                                                                      self.train_rng),
                                  cfg.c_train, self.train_rng)
        if self.ready(rig.shadow_buffer) and len(rig.hrl_buffer) > 0:
            shadow_mod.shadow_train_step(rig, cfg.batch_size, self.train_rng)

    def policy_factory(self, eval_rng):
        return lambda: rollouts.greedy_policy(self.rig.shadow)

    def networks(self):
        out = {f"shadow.{k}": v for k, v in self.rig.shadow.networks().items()}
        out.update({f"hrl.{k}": v for k, v in self.rig.hrl.networks().items()})
        return out


_ADAPTERS = {
    "Flat": FlatAdapter,
    "FlatNStep": FlatAdapter,
    "GoalHRL": GoalHrlAdapter,
    "GoalHRLHindsight": GoalHrlAdapter,
    "Options": OptionsAdapter,
    "Shadow": ShadowAdapter,
    "ExploreExploit": ExploreExploitAdapter,
    "SwitchingEnsemble": SwitchingEnsembleAdapter,
}


def build_method(cfg: ExperimentConfig, seed: int):
    return _ADAPTERS[cfg.method](cfg, seed)


# ---------------------------------------------------------------------------
# evaluation and the run loop
# ---------------------------------------------------------------------------


def evaluate(policy_factory, spec: envs.EnvSpec, n_episodes: int,
             rng: np.random.Generator) -> tuple[float, float]:
    """Greedy evaluation; an episode counts as a success if the success
    predicate holds at any step. Never touches replay buffers."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    successes = 0
    returns = []
    for _ in range(n_episodes):
        policy = policy_factory()
        state, obs = envs.reset(spec, rng)
        total = 0.0
        hit = False
        while True:
            state, res = envs.step(spec, state, np.asarray(policy(obs), float))
            total += res.reward
            hit = hit or res.success
            obs = res.observation
            if res.done:
                break
        successes += int(hit)
        returns.append(total)
    return successes / n_episodes, float(np.mean(returns))


def run_one_seed(cfg: ExperimentConfig, seed: int,
                 checkpoint_dir: Path | None = None) -> list[EvalRecord]:
    adapter = build_method(cfg, seed)
    spec = adapter.spec
    records: list[EvalRecord] = []
    started = time.monotonic()
    best_success = -1.0

    def take_eval(step_label: int) -> float:
        eval_rng = substream(seed, "eval", str(step_label))
        rate, mean_ret = evaluate(adapter.policy_factory(eval_rng), spec,
                                  cfg.eval_episodes, eval_rng)
        elapsed = time.monotonic() - started
        records.append(EvalRecord(seed, step_label, rate, mean_ret,
                                  elapsed if cfg.record_timing else 0.0))
        nonlocal best_success
        if rate > best_success:
            best_success = rate
            if checkpoint_dir is not None:
                save_checkpoint(adapter, cfg, seed, checkpoint_dir)
        return rate

    take_eval(0)
    next_eval = cfg.eval_every
    scheduled_train_steps = 0
    stop = cfg.total_env_steps == 0
    while not stop:
        adapter.collect_episode()
        want = adapter.env_steps // cfg.env_steps_per_train_step
        while scheduled_train_steps < want:
            adapter.train_step()
            scheduled_train_steps += 1
        while next_eval <= adapter.env_steps and next_eval <= cfg.total_env_steps:
            rate = take_eval(next_eval)
            next_eval += cfg.eval_every
            if cfg.early_stop_success is not None and rate >= cfg.early_stop_success:
                stop = True
                break
        if adapter.env_steps >= cfg.total_env_steps:
            stop = True
    return records


def _seed_task(args):
    cfg_dict, seed, ckpt = args
    cfg = ExperimentConfig(**cfg_dict)
    return run_one_seed(cfg, seed, Path(ckpt) if ckpt else None)


def run_experiment(cfg: ExperimentConfig, csv_path=None) -> list[EvalRecord]:
    """Run every seed, write one CSV (sorted by seed order, then step)."""
    validate_config(cfg)
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    if csv_path is None:
        csv_path = out / f"{cfg.method}_{cfg.task}.csv"
    ckpt_root = out / "checkpoints" / Path(csv_path).stem if cfg.save_checkpoints else None

    per_seed: dict[int, list[EvalRecord]] = {}
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        import multiprocessing as mp

        # children inherit the parent's BLAS thread configuration; overriding
        # it would change gemm summation order and break byte-reproducibility
        # between serial and parallel runs
        tasks = [(dataclasses.asdict(cfg), seed,
                  str(ckpt_root / f"seed{seed}") if ckpt_root else None)
                 for seed in cfg.seeds]
        with mp.get_context("spawn").Pool(min(cfg.workers, len(cfg.seeds))) as pool:
            for seed, recs in zip(cfg.seeds, pool.map(_seed_task, tasks)):
                per_seed[seed] = recs
    else:
        for seed in cfg.seeds:
            per_seed[seed] = run_one_seed(cfg, seed,
                                          ckpt_root / f"seed{seed}" if ckpt_root else None)

    records = [r for seed in cfg.seeds for r in per_seed[seed]]
    write_csv(csv_path, cfg, records)
    return records


def write_csv(path, cfg: ExperimentConfig, records: list[EvalRecord]) -> None:
    with open(path, "w") as fh:
        fh.write(f"# config: {serialize_config(cfg)}\n")
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(f"{r.seed},{r.env_step},{r.success_rate:.10g},"
                     f"{r.mean_return:.10g},{r.wall_clock_seconds:.3f}\n")


def read_csv(path) -> list[EvalRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line == CSV_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            try:
                records.append(EvalRecord(int(parts[0]), int(parts[1]), float(parts[2]),
                                          float(parts[3]), float(parts[4])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return records


def best_success_by_seed(records: list[EvalRecord]) -> dict[int, float]:
    """Early-stopping headline: the best evaluation success per seed."""
    best: dict[int, float] = {}
    for r in records:
        best[r.seed] = max(best.get(r.seed, 0.0), r.success_rate)
    return best


def mean_best_success(records: list[EvalRecord]) -> float:
    per_seed = best_success_by_seed(records)
    return float(np.mean(list(per_seed.values())))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("c_train", "c_expl", "c_rew", "c_switch", "combined_networks")


def sweep(base_cfg: ExperimentConfig, axis: str, values) -> dict:
    """Clone the config per value, run each, and write an index file mapping
    value -> CSV path."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"invalid sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    out = output_dir(base_cfg)
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    for value in values:
        cfg = dataclasses.replace(base_cfg, **{axis: value})
        validate_config(cfg)
        csv_path = out / f"{cfg.method}_{cfg.task}_{axis}_{value}.csv"
        run_experiment(cfg, csv_path)
        index[value] = csv_path
    with open(out / f"sweep_{axis}_index.txt", "w") as fh:
        for value, path in index.items():
            fh.write(f"{value}\t{path}\n")
    return index


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


def compute_series(records: list[EvalRecord]):
    """Per-step mean success over seeds with standard error (ddof=1; zero for
    a single seed). Seeds that stopped early carry their last value forward."""
    seeds = sorted({r.seed for r in records})
    steps = sorted({r.env_step for r in records})
    by_seed = {s: {r.env_step: r.success_rate for r in records if r.seed == s}
               for s in seeds}
    mean, err = [], []
    for step in steps:
        vals = []
        for s in seeds:
            last = None
            for k in sorted(by_seed[s]):
                if k <= step:
                    last = by_seed[s][k]
            vals.append(last if last is not None else 0.0)
        vals = np.asarray(vals, dtype=float)
        mean.append(float(vals.mean()))
        err.append(float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0)
    return np.asarray(steps), np.asarray(mean), np.asarray(err)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def emit_curves(csv_paths, out_path) -> None:
    """Success-rate curves (mean over seeds, standard-error band) as a
    self-contained SVG, one series per CSV."""
    series = []
    for path in csv_paths:
        recs = read_csv(path)
        if not recs:
            raise ValueError(f"{path}: no data rows")
        series.append((Path(path).stem, *compute_series(recs)))

    width, height = 640, 420
    ml, mr, mt, mb = 60, 20, 20, 45
    x_max = max(float(s[1].max()) for s in series) or 1.0
    px = lambda x: ml + (width - ml - mr) * (x / x_max)
    py = lambda y: (height - mb) - (height - mt - mb) * y

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    # axes and ticks
    parts.append(f'<line x1="{ml}" y1="{py(0)}" x2="{width - mr}" y2="{py(0)}" '
                 'stroke="black"/>')
    parts.append(f'<line x1="{ml}" y1="{py(0)}" x2="{ml}" y2="{py(1)}" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{ml - 8}" y="{py(frac) + 4}" font-size="11" '
                     f'text-anchor="end">{frac:g}</text>')
        parts.append(f'<line x1="{ml - 4}" y1="{py(frac)}" x2="{ml}" y2="{py(frac)}" '
                     'stroke="black"/>')
    for k in range(5):
        x = x_max * k / 4
        parts.append(f'<text x="{px(x)}" y="{height - mb + 16}" font-size="11" '
                     f'text-anchor="middle">{x:g}</text>')
        parts.append(f'<line x1="{px(x)}" y1="{py(0)}" x2="{px(x)}" y2="{py(0) + 4}" '
                     'stroke="black"/>')
    parts.append(f'<text x="{(ml + width - mr) / 2}" y="{height - 8}" font-size="12" '
                 'text-anchor="middle">environment steps</text>')
    parts.append(f'<text x="14" y="{(py(0) + py(1)) / 2}" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 14 {(py(0) + py(1)) / 2})">'
                 'success rate</text>')

    for i, (name, steps, mean, err) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        if len(steps) > 1:
            upper = [(px(s), py(min(1.0, m + e))) for s, m, e in zip(steps, mean, err)]
            lower = [(px(s), py(max(0.0, m - e))) for s, m, e in zip(steps, mean, err)]
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in upper + lower[::-1])
            parts.append(f'<polygon points="{pts}" fill="{color}" opacity="0.18"/>')
            line = " ".join(f"{px(s):.2f},{py(m):.2f}" for s, m in zip(steps, mean))
            parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" '
                         'stroke-width="1.8"/>')
        for s, m in zip(steps, mean):
            parts.append(f'<circle cx="{px(s):.2f}" cy="{py(m):.2f}" r="2.4" '
                         f'fill="{color}"/>')
        parts.append(f'<text x="{width - mr - 6}" y="{mt + 16 + 15 * i}" font-size="11" '
                     f'text-anchor="end" fill="{color}">{name}</text>')
    parts.append("</svg>")
    Path(out_path).write_text("\n".join(parts))


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(adapter, cfg: ExperimentConfig, seed: int, directory: Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"method": cfg.method, "task": cfg.task, "seed": seed,
                "config": json.loads(serialize_config(cfg)), "networks": {}}
    for role, net in adapter.networks().items():
        fname = role.replace(".", "_") + ".bin"
        save_params(directory / fname, net.params)
        manifest["networks"][role] = fname
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_checkpoint(directory, task: str | None = None) -> tuple:
    """Rebuild the method adapter recorded in a checkpoint and load its weights.

    ``task`` optionally overrides the recorded task; a dimension mismatch
    (different observation layout) is reported as an error.
    """
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    cfg = ExperimentConfig(**{k: _coerce(k, v) for k, v in manifest["config"].items()})
    if task is not None:
        cfg = dataclasses.replace(cfg, task=task)
    validate_config(cfg)
    adapter = build_method(cfg, int(manifest["seed"]))
    nets = adapter.networks()
    for role, fname in manifest["networks"].items():
        if role not in nets:
            raise ValueError(f"checkpoint role {role!r} not present in rebuilt method")
        params = load_params(directory / fname)
        if params.size != nets[role].params.size:
            raise ValueError(f"checkpoint role {role!r}: parameter count mismatch")
        nets[role].params = params
    return adapter, cfg
