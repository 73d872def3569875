"""The five manipulation tasks, rollouts and task-completion scores."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from .arm import ARM_VARIANTS, ArmConfig, end_effector, fk, ik
from .world import Obj, SimParams, WorldState, state_for, step

TASK_KINDS = ("reach", "push", "hammer", "sweep", "strike")

DEFAULT_START = (2.1, -1.35, -1.35)


@dataclass(frozen=True, eq=False)
class TaskSpec:
    kind: str
    zone_center: tuple[float, float]
    zone_radius: float
    objects: tuple[Obj, ...] = ()
    particles: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    start_joints: tuple[float, ...] = DEFAULT_START
    max_steps: int = 60
    tool_radius: float = 0.03

    def __post_init__(self):
        object.__setattr__(self, "zone_center", (float(self.zone_center[0]), float(self.zone_center[1])))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "start_joints", tuple(float(q) for q in self.start_joints))
        p = np.array(self.particles, dtype=np.float64).reshape(-1, 2)
        p.flags.writeable = False
        object.__setattr__(self, "particles", p)
        validate_task(self)

    @property
    def initial(self) -> WorldState:
        return self.initial_state(ARM_VARIANTS["arm3"])

    def initial_state(self, arm: ArmConfig) -> WorldState:
        """Start state for ``arm``; arms of another size start with the same end-effector point."""
        return state_for(arm, _start_pose(arm, self.start_joints), self.objects, self.particles)

    def sim_params(self, base: SimParams = SimParams()) -> SimParams:
        return replace(base, tool_radius=self.tool_radius)

    def with_(self, **changes) -> "TaskSpec":
        return replace(self, **changes)


@lru_cache(maxsize=256)
def _start_pose(arm: ArmConfig, start_joints: tuple[float, ...]) -> tuple[float, ...]:
    ref = ARM_VARIANTS["arm3"]
    if arm.dof == len(start_joints) and arm.link_lengths == ref.link_lengths:
        return start_joints
    start_ee = end_effector(ref, start_joints)
    seed = np.array([2.0] + [-2.7 / max(1, arm.dof - 1)] * (arm.dof - 1))
    return tuple(float(v) for v in ik(arm, start_ee, seed, iters=400))


def validate_task(task: TaskSpec) -> None:
    if task.kind not in TASK_KINDS:
        raise ConfigurationError(f"unknown task kind {task.kind!r}; choose from {TASK_KINDS}")
    if task.zone_radius <= 0:
        raise ConfigurationError("zone radius must be positive")
    if task.max_steps < 1:
        raise ConfigurationError("max_steps must be positive")
    tags = [o.tag for o in task.objects]
    if task.kind == "push" and not [o for o in task.objects if o.tag == "object" and o.movable and o.shape == "disc"]:
        raise ConfigurationError("push task needs one movable disc tagged 'object'")
    if task.kind == "hammer" and "target" not in tags:
        raise ConfigurationError("hammer task needs an object tagged 'target'")
    if task.kind == "strike" and "block" not in tags:
        raise ConfigurationError("strike task needs objects tagged 'block'")
    if task.kind == "sweep" and not len(task.particles):
        raise ConfigurationError("sweep task needs at least one particle")


def default_task(kind: str) -> TaskSpec:
    """The fixed desk-scale instance of each task used by the experiments."""
    if kind == "reach":
        return TaskSpec("reach", (-0.22, 0.52), 0.05, max_steps=60)
    if kind == "push":
        puck = Obj("disc", (0.12, 0.56), (0.045,), "object", True)
        return TaskSpec("push", (-0.16, 0.62), 0.06, (puck,), max_steps=60)
    if kind == "hammer":
        nail = Obj("box", (-0.15, 0.4), (0.035, 0.035), "target", False)
        return TaskSpec("hammer", (-0.15, 0.4), 0.06, (nail,), max_steps=60, tool_radius=0.04)
    if kind == "strike":
        blocks = tuple(Obj("box", (-0.05, 0.45 + 0.07 * i), (0.03, 0.03), "block", True) for i in range(3))
        return TaskSpec("strike", (-0.05, 0.52), 0.1, blocks, max_steps=60)
    if kind == "sweep":
        rng = np.random.default_rng(7)
        particles = np.array([0.08, 0.51]) + rng.uniform(-0.035, 0.035, size=(10, 2))
        return TaskSpec("sweep", (-0.1, 0.52), 0.15, (), particles, max_steps=110, tool_radius=0.06)
    raise ConfigurationError(f"unknown task kind {kind!r}; choose from {TASK_KINDS}")


def random_task(kind: str, rng: np.random.Generator, arm: ArmConfig | None = None) -> TaskSpec:
    """A randomised but reachable instance of ``kind`` (used to build pretraining data)."""
    arm = arm or ARM_VARIANTS["arm3"]
    base = default_task(kind)
    for _ in range(100):
        shift = rng.uniform(-0.1, 0.1, size=2)
        flip = rng.random() < 0.5
        task = _transform_task(base, shift, flip)
        start = _jitter_start(base.start_joints, rng)
        task = replace(task, start_joints=start)
        pts = [task.zone_center] + [o.position for o in task.objects] + list(task.particles)
        if all(_comfortably_reachable(arm, p) for p in pts):
            return task
    return base


def _comfortably_reachable(arm: ArmConfig, p) -> bool:
    r = float(np.linalg.norm(np.asarray(p) - np.array(arm.base)))
    return 0.3 <= r <= 0.75 and p[1] > 0.15


def _jitter_start(start, rng) -> tuple[float, ...]:
    return tuple(float(q + rng.uniform(-0.15, 0.15)) for q in start)


def _transform_task(task: TaskSpec, shift, flip: bool) -> TaskSpec:
    def tf(p):
        x, y = p
        if flip:
            x = -x
        return (x + shift[0], y + shift[1])

    objects = tuple(replace(o, position=tf(o.position)) for o in task.objects)
    particles = np.array([tf(p) for p in task.particles]).reshape(-1, 2)
    start = task.start_joints
    if flip:
        # mirror the arm posture about the y axis
        start = (math.pi - start[0],) + tuple(-q for q in start[1:])
    return replace(task, zone_center=tf(task.zone_center), objects=objects, particles=particles,
                   start_joints=start)


Trajectory = tuple  # of WorldState, s_0 .. s_m


def rollout(task: TaskSpec, controls, arm: ArmConfig, params: SimParams = SimParams()) -> Trajectory:
    controls = np.asarray(controls, dtype=np.float64).reshape(-1, arm.dof) if len(controls) else np.zeros((0, arm.dof))
    if len(controls) > task.max_steps:
        raise ConfigurationError(f"{len(controls)} controls exceed the task horizon {task.max_steps}")
    params = task.sim_params(params)
    states = [task.initial_state(arm)]
    for u in controls:
        states.append(step(states[-1], u, arm, params))
    return tuple(states)


def _surface_distance(obj: Obj, ee, tool_radius: float) -> float:
    return max(0.0, obj.distance(ee) - tool_radius)


def _ratio_score(d_i: float, d_f: float) -> float:
    if d_i <= 0.0:
        return 1.0 if d_f <= 0.0 else 0.0
    return float(np.clip(1.0 - d_f / d_i, 0.0, 1.0))


def tool_distance(task: TaskSpec, state: WorldState) -> float:
    """Hammer/strike: surface distance between the tool disc and the nearest target object."""
    tag = "target" if task.kind == "hammer" else "block"
    objs = [o for o in state.objects if o.tag == tag]
    if not objs:
        raise ConfigurationError(f"{task.kind} task has no object tagged {tag!r}")
    return min(_surface_distance(o, state.ee, task.tool_radius) for o in objs)


def pushed_object(state: WorldState) -> Obj:
    for o in state.objects:
        if o.tag == "object" and o.movable:
            return o
    raise ConfigurationError("push task has no movable object tagged 'object'")


def completion_details(task: TaskSpec, traj: Trajectory) -> dict[str, float]:
    """Score in [0, 1] (higher is better) plus the raw measurement it came from."""
    if not traj:
        raise ConfigurationError("trajectory is empty")
    validate_task(task)
    first, last = traj[0], traj[-1]
    zone = np.array(task.zone_center)
    if task.kind == "reach":
        d_i = float(np.linalg.norm(np.array(first.ee) - zone))
        d_f = float(np.linalg.norm(np.array(last.ee) - zone))
        return {"score": _ratio_score(d_i, d_f), "raw": d_f}
    if task.kind == "push":
        d_i = float(np.linalg.norm(np.array(pushed_object(first).position) - zone))
        d_f = float(np.linalg.norm(np.array(pushed_object(last).position) - zone))
        return {"score": _ratio_score(d_i, d_f), "raw": d_f}
    if task.kind == "sweep":
        if not len(last.particles):
            raise ConfigurationError("sweep task has no particles")
        inside = np.linalg.norm(last.particles - zone, axis=1) <= task.zone_radius
        return {"score": float(inside.mean()), "raw": float(inside.mean())}
    d = [tool_distance(task, s) for s in traj]
    d_min = min(d)
    return {"score": _ratio_score(d[0], d_min), "raw": d_min}


def task_completion(task: TaskSpec, traj: Trajectory) -> float:
    return completion_details(task, traj)["score"]


def write_trajectory_csv(traj: Trajectory, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dof = len(traj[0].joints)
    n_obj = len(traj[0].objects)
    n_par = len(traj[0].particles)
    header = ["step"] + [f"q{j}" for j in range(dof)] + ["ee_x", "ee_y"]
    header += [f"obj{i}_{a}" for i in range(n_obj) for a in "xy"]
    header += [f"particle{i}_{a}" for i in range(n_par) for a in "xy"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in traj:
            row = [s.t] + [repr(q) for q in s.joints] + [repr(s.ee[0]), repr(s.ee[1])]
            row += [repr(v) for o in s.objects for v in o.position]
            row += [repr(float(v)) for p in s.particles for v in p]
            w.writerow(row)
    return path
