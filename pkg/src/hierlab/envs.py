"""Desk-scale 2-D point-mass worlds: a U-maze, a push task, and two block tasks.

The worlds are fully observed and Markovian. An agent is a point with
velocity; walls are axis-aligned rectangles resolved by per-axis clamping;
the optional block is quasi-static (it moves only while the agent pushes
it, taking the agent's velocity component along the contact normal).

Layout constants are fixed, documented values: arena half-width 4, success
radius 0.5, episode limit 200, dt 0.1, friction 0.9, max speed 2. Velocity
is in arena units per step; ``dt`` scales how quickly actions change it.

Reward is dense negative distance from the goal entity (agent or block) to
the target, divided by the arena half-width. Success means that distance is
strictly below the success radius; the episode ends on success or when the
step limit is hit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TASKS = ("MazeDesk", "PushDesk", "BlockDesk", "BlockMazeDesk")

ARENA_HALFWIDTH = 4.0
SUCCESS_RADIUS = 0.5
EPISODE_LIMIT = 120  # long enough to execute the full corridor path with
                     # margin, short enough that undirected within-episode
                     # diffusion cannot round the slab
DT = 0.1
FRICTION = 0.9
MAX_SPEED = 2.0
RESET_NOISE_RADIUS = 0.1
CONTACT_RADIUS = 0.6

# U-corridor: three cells (lower arm, right passage, upper arm) around a
# central slab. The dense reward pulls straight at the slab below the target,
# so getting out takes a ~5-unit coherent excursion against the gradient and
# two turns. Undirected action noise reliably fails here at desk budgets;
# directed subgoal chains and goal-chasing exploration do not.
#
# Walls that touch the arena boundary overhang it (here x0 < -halfwidth):
# collision tests are strict-interior, so a rectangle ending exactly at the
# boundary would leave a zero-width seam an agent clamped to the arena face
# could slide through.
_U_WALL = (-ARENA_HALFWIDTH - 1.0, -1.4, 2.4, 1.4)
_U_START = (-3.1, -2.7)
_U_TARGET = (-3.1, 2.7)


@dataclass(frozen=True)
class EnvSpec:
    task_id: str
    arena_halfwidth: float
    wall_segments: tuple[tuple[float, float, float, float], ...]  # (x0, y0, x1, y1)
    target_xy: tuple[float, float]
    success_radius: float
    episode_limit: int
    block_present: bool
    dt: float
    friction: float
    max_speed: float
    start_xy: tuple[float, float]
    block_start_xy: tuple[float, float] | None
    goal_entity: str  # "agent" or "block"

    @property
    def obs_dim(self) -> int:
        return 8 if self.block_present else 6


@dataclass
class EnvState:
    agent_xy: np.ndarray
    agent_vel: np.ndarray
    block_xy: np.ndarray | None
    block_vel: np.ndarray | None
    t: int


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    success: bool


def make_spec(task_id: str) -> EnvSpec:
    if task_id not in TASKS:
        raise ValueError(f"unknown task {task_id!r}; expected one of {TASKS}")
    common = dict(
        arena_halfwidth=ARENA_HALFWIDTH,
        success_radius=SUCCESS_RADIUS,
        episode_limit=EPISODE_LIMIT,
        dt=DT,
        friction=FRICTION,
        max_speed=MAX_SPEED,
    )
    if task_id == "MazeDesk":
        # start in the lower arm of the U, target straight above in the upper arm
        return EnvSpec(task_id, wall_segments=(_U_WALL,), target_xy=_U_TARGET,
                       block_present=False, start_xy=_U_START, block_start_xy=None,
                       goal_entity="agent", **common)
    if task_id == "PushDesk":
        # a wall with a gap, plugged by a movable block; the gap is narrower than
        # the contact diameter, so the only way through is to push the block
        walls = ((-ARENA_HALFWIDTH - 1.0, -0.6, -0.5, 0.6),
                 (0.5, -0.6, ARENA_HALFWIDTH + 1.0, 0.6))
        return EnvSpec(task_id, wall_segments=walls, target_xy=(0.0, 2.7),
                       block_present=True, start_xy=(0.0, -2.7), block_start_xy=(0.0, 0.0),
                       goal_entity="agent", **common)
    if task_id == "BlockDesk":
        return EnvSpec(task_id, wall_segments=(), target_xy=(2.5, 2.5),
                       block_present=True, start_xy=(-2.7, -2.7), block_start_xy=(0.0, 0.0),
                       goal_entity="block", **common)
    # BlockMazeDesk: push the block around the U (agent starts left of it)
    return EnvSpec(task_id, wall_segments=(_U_WALL,), target_xy=_U_TARGET,
                   block_present=True, start_xy=(-3.6, -2.7),
                   block_start_xy=(-2.8, -2.7), goal_entity="block", **common)


def _entity_xy(spec: EnvSpec, state: EnvState) -> np.ndarray:
    return state.block_xy if spec.goal_entity == "block" else state.agent_xy


def observe(spec: EnvSpec, state: EnvState) -> np.ndarray:
    target = np.asarray(spec.target_xy)
    parts = [state.agent_xy, state.agent_vel]
    if spec.block_present:
        parts.append(state.block_xy - state.agent_xy)
    parts.append(target - _entity_xy(spec, state))
    return np.concatenate(parts)


def reset(spec: EnvSpec, rng: np.random.Generator) -> tuple[EnvState, np.ndarray]:
    """Start pose plus uniform noise inside a disk of radius 0.1."""
    r = RESET_NOISE_RADIUS * np.sqrt(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * np.pi)
    agent = np.asarray(spec.start_xy, dtype=np.float64) + r * np.array([np.cos(theta), np.sin(theta)])
    block = np.asarray(spec.block_start_xy, dtype=np.float64) if spec.block_present else None
    state = EnvState(
        agent_xy=agent,
        agent_vel=np.zeros(2),
        block_xy=block,
        block_vel=np.zeros(2) if spec.block_present else None,
        t=0,
    )
    return state, observe(spec, state)


def _inside(rect, p) -> bool:
    x0, y0, x1, y1 = rect
    return x0 < p[0] < x1 and y0 < p[1] < y1


def _move_axis(spec: EnvSpec, pos: np.ndarray, delta: float, axis: int) -> tuple[float, bool]:
    """Advance one coordinate, clamping at the first wall or arena face crossed.

    Returns the new coordinate and whether the move was blocked. Walls must be
    thicker than one step of travel (true for all fixed layouts, since per-axis
    speed is bounded by dt/(1-friction) = 1); a thinner wall could be tunneled.
    """
    new = pos[axis] + delta
    blocked = False
    hw = spec.arena_halfwidth
    if new > hw:
        new, blocked = hw, True
    elif new < -hw:
        new, blocked = -hw, True
    probe = pos.copy()
    probe[axis] = new
    for rect in spec.wall_segments:
        if _inside(rect, probe):
            lo = rect[axis]
            hi = rect[axis + 2]
            new = lo if delta > 0 else hi
            probe[axis] = new
            blocked = True
    return new, blocked


def _resolve_move(spec: EnvSpec, pos: np.ndarray, vel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Axis-separated integration; blocked axes lose their velocity."""
    out = pos.copy()
    v = vel.copy()
    for axis in (0, 1):
        out[axis], blocked = _move_axis(spec, out, v[axis], axis)
        if blocked:
            v[axis] = 0.0
    return out, v


def step(spec: EnvSpec, state: EnvState, action) -> tuple[EnvState, StepResult]:
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (2,):
        raise ValueError(f"action must be a 2-vector, got shape {action.shape}")
    if np.any(action < -1.0) or np.any(action > 1.0):
        raise ValueError(f"action {action} outside [-1, 1]^2")
    if state.t >= spec.episode_limit:
        raise ValueError("episode already over; reset the environment")

    vel = spec.friction * state.agent_vel + spec.dt * action
    speed = float(np.linalg.norm(vel))
    if speed > spec.max_speed:
        vel = vel * (spec.max_speed / speed)
    agent, vel = _resolve_move(spec, state.agent_xy, vel)

    block = None
    block_vel = None
    if spec.block_present:
        block = state.block_xy.copy()
        block_vel = np.zeros(2)
        gap = block - agent
        dist = float(np.linalg.norm(gap))
        if dist < CONTACT_RADIUS:
            normal = gap / dist if dist > 1e-12 else np.array([1.0, 0.0])
            push = max(0.0, float(np.dot(vel, normal)))
            if push > 0.0:
                block, block_vel = _resolve_move(spec, block, push * normal)
            # keep the pair separated; if the block is pinned, back the agent off
            gap = block - agent
            dist = float(np.linalg.norm(gap))
            if dist < CONTACT_RADIUS:
                normal = gap / dist if dist > 1e-12 else np.array([1.0, 0.0])
                moved, _ = _resolve_move(spec, agent, block - normal * CONTACT_RADIUS - agent)
                agent = moved

    new = EnvState(agent_xy=agent, agent_vel=vel, block_xy=block, block_vel=block_vel,
                   t=state.t + 1)
    entity = _entity_xy(spec, new)
    dist_to_target = float(np.linalg.norm(entity - np.asarray(spec.target_xy)))
    succeeded = dist_to_target < spec.success_radius
    result = StepResult(
        observation=observe(spec, new),
        reward=-dist_to_target / spec.arena_halfwidth,
        done=succeeded or new.t >= spec.episode_limit,
        success=succeeded,
    )
    return new, result


def success(spec: EnvSpec, state: EnvState) -> bool:
    """Strictly-inside test against the success radius."""
    dist = float(np.linalg.norm(_entity_xy(spec, state) - np.asarray(spec.target_xy)))
    return dist < spec.success_radius


def dump_walls(spec: EnvSpec) -> str:
    """Wall geometry as line segments, one ``x0 y0 x1 y1`` per line, for plotting."""
    hw = spec.arena_halfwidth
    lines = [
        (-hw, -hw, hw, -hw), (hw, -hw, hw, hw), (hw, hw, -hw, hw), (-hw, hw, -hw, -hw),
    ]
    for x0, y0, x1, y1 in spec.wall_segments:
        lines += [(x0, y0, x1, y0), (x1, y0, x1, y1), (x1, y1, x0, y1), (x0, y1, x0, y0)]
    return "\n".join(" ".join(f"{v:g}" for v in seg) for seg in lines)
