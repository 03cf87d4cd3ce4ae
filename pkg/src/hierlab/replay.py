"""Experience records, ring-buffer storage, and every transition transform:
multi-horizon reward aggregation, goal freezing, hindsight relabeling, and
exact-composition mixed sampling from two buffers.

Horizon windows never cross a terminal step or an episode boundary; when a
window is cut short, the record keeps the number of steps actually summed in
``horizon`` so the bootstrap discount can match it.
"""

from __future__ import annotations

import dataclasses
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

DEFAULT_CAPACITY = 1_000_000


@dataclass
class Transition:
    """One atomic environment step."""

    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool


@dataclass
class StampedTransition(Transition):
    """Atomic step plus bookkeeping used by window sampling and trainers.

    ``episode`` and ``step`` let a sampler rebuild consecutive windows from a
    flat buffer; ``goal``/``anchor`` carry the exploration goal active when
    the step was taken; ``tag`` marks which member/option produced it.
    """

    episode: int = 0
    step: int = 0
    goal: np.ndarray | None = None
    anchor: np.ndarray | None = None
    tag: int | None = None


@dataclass
class GoalTransition:
    """Low-level goal-conditioned step.

    ``anchor_xy`` is the agent position when the goal was set and ``next_xy``
    the position after the step; both are stored so the intrinsic reward can
    be recomputed when the goal is replaced.
    """

    s: np.ndarray
    g: np.ndarray
    a: np.ndarray
    r_int: float
    s_next: np.ndarray
    g_next: np.ndarray
    done: bool
    anchor_xy: np.ndarray
    next_xy: np.ndarray


@dataclass
class CStepTransition:
    """Temporally aggregated high-level record.

    ``g_t`` is the high-level action active at the window start (a goal
    vector, or an option index for discrete high levels). ``horizon`` is the
    number of environment rewards actually summed. ``states_window`` and
    ``actions_window`` optionally log the low-level steps inside the window
    for off-policy goal relabeling.
    """

    s_t: np.ndarray
    g_t: object
    r_sum: float
    s_t_plus_c: np.ndarray
    done: bool
    horizon: int
    states_window: list | None = None
    actions_window: list | None = None


NStep = namedtuple("NStep", "s a r_sum s_next done horizon")


class ReplayBuffer:
    """FIFO ring buffer of one record type; logical index 0 is the oldest."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._storage: list = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._storage)

    def append(self, record) -> None:
        if len(self._storage) < self.capacity:
            self._storage.append(record)
        else:
            self._storage[self._cursor] = record
            self._cursor = (self._cursor + 1) % self.capacity

    def __getitem__(self, idx: int):
        n = len(self._storage)
        if not 0 <= idx < n:
            raise IndexError(idx)
        return self._storage[(self._cursor + idx) % self.capacity if n == self.capacity else idx]

    def records(self):
        return (self[i] for i in range(len(self)))

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if not self._storage:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, len(self._storage), size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list:
        return [self[i] for i in self.sample_indices(batch_size, rng)]


def aggregate_cstep(trajectory, t: int, c: int, goal=None) -> CStepTransition:
    """Sum ``c`` environment rewards starting at ``t``; stop early at a
    terminal step or the end of the trajectory."""
    if c < 1:
        raise ValueError("horizon c must be >= 1")
    if not 0 <= t < len(trajectory):
        raise ValueError(f"start index {t} out of range for trajectory of length {len(trajectory)}")
    r_sum = 0.0
    end = t
    for k in range(t, min(t + c, len(trajectory))):
        r_sum += trajectory[k].r
        end = k
        if trajectory[k].done:
            break
    return CStepTransition(
        s_t=trajectory[t].s,
        g_t=goal,
        r_sum=r_sum,
        s_t_plus_c=trajectory[end].s_next,
        done=bool(trajectory[end].done),
        horizon=end - t + 1,
    )


def nstep_target_inputs(trajectory, t: int, c_rew: int) -> NStep:
    """Multi-step reward window keyed to the atomic action at ``t``."""
    agg = aggregate_cstep(trajectory, t, c_rew)
    return NStep(trajectory[t].s, trajectory[t].a, agg.r_sum, agg.s_t_plus_c,
                 agg.done, agg.horizon)


def freeze_goal(record: GoalTransition) -> GoalTransition:
    """Train as if the goal never changes: the next goal becomes the current one."""
    return dataclasses.replace(record, g_next=record.g)


def intrinsic_reward_value(anchor_xy, goal, next_xy) -> float:
    return -float(np.linalg.norm((np.asarray(anchor_xy) + np.asarray(goal)) - np.asarray(next_xy)))


def hindsight_relabel(record: GoalTransition, achieved_delta) -> GoalTransition:
    """Replace the goal with a displacement that was actually achieved and
    recompute the intrinsic reward against it."""
    g_new = np.asarray(achieved_delta, dtype=np.float64)
    return dataclasses.replace(
        record,
        g=g_new,
        g_next=g_new,
        r_int=intrinsic_reward_value(record.anchor_xy, g_new, record.next_xy),
    )


def mixed_sample_indices(len_a: int, len_b: int, batch_size: int, fraction_a: float,
                         rng: np.random.Generator) -> list[tuple[int, int]]:
    """Exact-composition split: round(batch * fraction) draws from A, rest from B,
    shuffled. Returns (which_buffer, index) pairs."""
    if len_a == 0 or len_b == 0:
        raise ValueError("both buffers must be non-empty")
    if not 0.0 <= fraction_a <= 1.0:
        raise ValueError(f"fraction_a must lie in [0, 1], got {fraction_a}")
    exact = batch_size * fraction_a
    n_a = int(round(exact))
    if abs(exact - n_a) > 1e-9:
        raise ValueError(f"batch_size * fraction_a = {exact} is not an integer")
    picks = [(0, int(i)) for i in rng.integers(0, len_a, size=n_a)]
    picks += [(1, int(i)) for i in rng.integers(0, len_b, size=batch_size - n_a)]
    order = rng.permutation(batch_size)
    return [picks[i] for i in order]


def sample_mixed(buffer_a: ReplayBuffer, buffer_b: ReplayBuffer, batch_size: int,
                 fraction_a: float, rng: np.random.Generator) -> list:
    pairs = mixed_sample_indices(len(buffer_a), len(buffer_b), batch_size, fraction_a, rng)
    return [buffer_a[i] if which == 0 else buffer_b[i] for which, i in pairs]


def sample_nstep(buffer: ReplayBuffer, batch_size: int, n: int,
                 rng: np.random.Generator) -> list[NStep]:
    """Sample window starts uniformly and extend each window up to ``n``
    consecutive steps of the same episode (stopping at terminals)."""
    starts = buffer.sample_indices(batch_size, rng)
    return [window_at(buffer, int(i), n) for i in starts]


def window_at(buffer: ReplayBuffer, start: int, n: int, same_tag: bool = False) -> NStep:
    first = buffer[start]
    chunk = [first]
    for k in range(1, n):
        if chunk[-1].done or start + k >= len(buffer):
            break
        rec = buffer[start + k]
        if rec.episode != chunk[-1].episode or rec.step != chunk[-1].step + 1:
            break
        if same_tag and rec.tag != first.tag:
            break
        chunk.append(rec)
    return nstep_target_inputs(chunk, 0, n)


class StampedArrayBuffer:
    """Column-oriented FIFO store of StampedTransition records.

    Same contract as ReplayBuffer (append / len / logical indexing / FIFO
    eviction) but fields live in contiguous arrays, so multi-step windows for
    a whole batch are built with a handful of vectorized operations instead
    of per-record loops. Storage grows geometrically up to ``capacity``.
    """

    _VEC = ("s", "a", "s_next", "goal", "anchor")
    _SCALAR = ("r", "done", "episode", "step", "tag")

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._cols: dict[str, np.ndarray] = {}
        self._size = 0
        self._head = 0  # physical index of the oldest record when full
        self._alloc = 0

    def __len__(self) -> int:
        return self._size

    def _ensure(self, record: StampedTransition) -> None:
        if self._alloc:
            return
        self._alloc = min(self.capacity, 4096)
        for name in self._VEC:
            val = getattr(record, name)
            if val is not None:
                dim = np.asarray(val).shape[0]
                self._cols[name] = np.empty((self._alloc, dim), dtype=np.float64)
        self._cols["r"] = np.empty(self._alloc, dtype=np.float64)
        self._cols["done"] = np.empty(self._alloc, dtype=bool)
        self._cols["episode"] = np.empty(self._alloc, dtype=np.int64)
        self._cols["step"] = np.empty(self._alloc, dtype=np.int64)
        if record.tag is not None:
            self._cols["tag"] = np.empty(self._alloc, dtype=np.int64)

    def _grow(self) -> None:
        new = min(self.capacity, self._alloc * 2)
        for name, col in self._cols.items():
            fresh = np.empty((new, *col.shape[1:]), dtype=col.dtype)
            fresh[: self._size] = col[: self._size]
            self._cols[name] = fresh
        self._alloc = new

    def append(self, record: StampedTransition) -> None:
        self._ensure(record)
        if self._size == self.capacity:
            pos = self._head
            self._head = (self._head + 1) % self.capacity
        else:
            if self._size == self._alloc:
                self._grow()
            pos = self._size
            self._size += 1
        for name in self._cols:
            val = getattr(record, name)
            self._cols[name][pos] = val

    def _phys(self, logical):
        if self._size == self.capacity and self._head:
            return (self._head + logical) % self.capacity
        return logical

    def __getitem__(self, idx: int) -> StampedTransition:
        if not 0 <= idx < self._size:
            raise IndexError(idx)
        p = self._phys(idx)
        c = self._cols
        return StampedTransition(
            s=c["s"][p].copy(), a=c["a"][p].copy(), r=float(c["r"][p]),
            s_next=c["s_next"][p].copy(), done=bool(c["done"][p]),
            episode=int(c["episode"][p]), step=int(c["step"][p]),
            goal=c["goal"][p].copy() if "goal" in c else None,
            anchor=c["anchor"][p].copy() if "anchor" in c else None,
            tag=int(c["tag"][p]) if "tag" in c else None)

    def records(self):
        return (self[i] for i in range(self._size))

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, self._size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list:
        return [self[int(i)] for i in self.sample_indices(batch_size, rng)]

    def column(self, name: str, logical_idx) -> np.ndarray:
        return self._cols[name][self._phys(np.asarray(logical_idx))]

    def nstep_windows(self, starts, n: int, same_tag: bool = False):
        """Vectorized multi-step windows from logical start indices.

        Returns (s, a, r_sum, s_next, done, horizon) arrays with the same
        semantics as nstep_target_inputs: windows stay within one episode,
        stop after a terminal step, and truncate at the end of the buffer.
        """
        starts = np.asarray(starts, dtype=np.int64)
        idx = starts[:, None] + np.arange(n, dtype=np.int64)[None, :]
        valid = idx < self._size
        idx_c = np.minimum(idx, self._size - 1)
        phys = self._phys(idx_c)
        c = self._cols
        ep = c["episode"][phys]
        stp = c["step"][phys]
        ok = valid & (ep == ep[:, :1]) & (stp == stp[:, :1] + np.arange(n)[None, :])
        if same_tag and "tag" in c:
            tag = c["tag"][phys]
            ok &= tag == tag[:, :1]
        done = c["done"][phys]
        done_before = np.concatenate(
            [np.zeros((len(starts), 1), dtype=bool),
             np.logical_or.accumulate(done, axis=1)[:, :-1]], axis=1)
        include = np.logical_and.accumulate(ok, axis=1) & ~done_before
        horizon = include.sum(axis=1)
        r_sum = (c["r"][phys] * include).sum(axis=1)
        last = self._phys(starts + horizon - 1)
        first = self._phys(starts)
        return (c["s"][first], c["a"][first], r_sum, c["s_next"][last],
                c["done"][last].astype(np.float64), horizon.astype(np.float64))


def _flat(v) -> str:
    if v is None:
        return "-"
    arr = np.atleast_1d(np.asarray(v))
    return ",".join(f"{x:.17g}" for x in arr.ravel())


def dump_buffer(buffer: ReplayBuffer, path) -> None:
    """One record per line, tab-separated fields, for offline inspection."""
    with open(path, "w") as fh:
        for rec in buffer.records():
            fields = [f"{name}={_flat(getattr(rec, name))}"
                      for name in (f.name for f in dataclasses.fields(rec))]
            fh.write("\t".join(fields) + "\n")
