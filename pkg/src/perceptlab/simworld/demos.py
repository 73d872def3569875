"""Scripted expert demonstrations: end-effector waypoint plans tracked with IK."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .arm import ArmConfig, ik, reachable
from .tasks import TaskSpec
from .world import Obj

MOTION_FRACTION = 0.75  # share of the horizon spent moving; the rest holds the final pose


def _unit(v) -> np.ndarray:
    v = np.asarray(v, float)
    n = np.linalg.norm(v)
    return v / n if n > 1e-12 else np.array([1.0, 0.0])


def _perp(v) -> np.ndarray:
    return np.array([-v[1], v[0]])


def _segment_distance(p, a, b) -> float:
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-12), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def _avoid(points: list, obstacle: np.ndarray, clearance: float) -> list:
    """Insert a detour before the last point if the final leg passes too close to ``obstacle``."""
    a, b = points[-2], points[-1]
    if _segment_distance(obstacle, a, b) >= clearance:
        return points
    side = _perp(_unit(b - a))
    if np.dot(a - obstacle, side) < 0:
        side = -side
    detour = obstacle + side * (clearance + 0.03)
    return points[:-1] + [detour, b]


def plan_waypoints(task: TaskSpec, start_ee, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    rng = rng or np.random.default_rng(0)
    start = np.asarray(start_ee, float)
    zone = np.array(task.zone_center)
    R = task.tool_radius
    jitter = lambda: rng.uniform(-0.003, 0.003, size=2)  # noqa: E731
    if task.kind == "reach":
        return [start, zone + jitter()]
    if task.kind == "push":
        obj = next(o for o in task.objects if o.tag == "object")
        c = np.array(obj.position)
        r = obj.size[0]
        d = _unit(zone - c)
        behind = c - d * (r + R + 0.03)
        pts = _avoid([start, behind], c, r + R + 0.02)
        return pts + [zone - d * (r + R) + jitter() * 0.3]
    if task.kind == "hammer":
        target = next(o for o in task.objects if o.tag == "target")
        c = np.array(target.position)
        away = _unit(start - c)
        raised = c + away * 0.18 + jitter()
        return [start, raised, c]
    if task.kind == "strike":
        blocks = np.array([o.position for o in task.objects if o.tag == "block"])
        c = blocks.mean(axis=0)
        side = _unit(np.array([start[0] - c[0], 0.0]))
        wind_up = c + side * 0.2 + jitter()
        return [start, wind_up, c - side * 0.12]
    if task.kind == "sweep":
        c = task.particles.mean(axis=0)
        d = _unit(zone - c)
        n = _perp(d)
        back = R + 0.057  # start each pass clear of the cluster
        pts = [start]
        for k, off in enumerate((0.0, 0.07, -0.07)):
            entry = c - d * back + n * off
            if k:
                # retrace the corridor just swept so no particle is dragged back out
                pts.append(pts[-2])
            pts += [entry + jitter() * 0.3, zone + n * off * 0.3]
        return pts
    raise ConfigurationError(f"no demonstration plan for task kind {task.kind!r}")


def _resample(points: list[np.ndarray], n: int) -> np.ndarray:
    pts = np.asarray(points, float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0:
        return np.repeat(pts[:1], n, axis=0)
    # smooth start and stop
    u = np.linspace(0.0, 1.0, n + 1)[1:]
    u = 0.5 - 0.5 * np.cos(np.pi * u)
    targets = u * s[-1]
    return np.stack([np.interp(targets, s, pts[:, k]) for k in range(2)], axis=1)


def scripted_demo(task: TaskSpec, arm: ArmConfig, seed: int = 0) -> np.ndarray:
    """Joint-target control sequence ``(task.max_steps, dof)`` demonstrating ``task``.

    Raises :class:`ConfigurationError` if a waypoint lies outside the arm's workspace.
    """
    rng = np.random.default_rng(seed)
    state = task.initial_state(arm)
    waypoints = plan_waypoints(task, state.ee, rng)
    for p in waypoints[1:]:
        if not reachable(arm, p):
            raise ConfigurationError(f"waypoint {np.round(p, 3).tolist()} is outside the workspace of {arm.name}")
    fraction = MOTION_FRACTION * (1.0 + rng.uniform(-0.03, 0.03))
    n_move = max(1, min(task.max_steps, int(round(task.max_steps * fraction))))
    path = _resample(waypoints, n_move)
    rest = np.array(state.joints)
    q = rest.copy()
    controls = []
    for p in path:
        q = ik(arm, p, q, iters=60, rest=rest, rest_gain=0.05)
        controls.append(q.copy())
    controls += [controls[-1]] * (task.max_steps - n_move)
    return np.array(controls)
