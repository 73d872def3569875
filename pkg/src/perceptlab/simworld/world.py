"""World state and quasi-static kinematic stepping.

Joints track their position targets at a capped angular speed. The
end-effector is a disc: it pushes movable discs, boxes and particles along
the contact normal until tangent, and stops dead when it reaches an
immovable object. Objects never touch each other and never drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError
from .arm import ArmConfig, end_effector

TOL = 1e-9


@dataclass(frozen=True)
class Obj:
    shape: str                      # "disc" | "box"
    position: tuple[float, float]
    size: tuple[float, ...]         # (radius,) for discs, (half_w, half_h) for boxes
    tag: str = "object"             # "object" | "target" | "block" | "decoy"
    movable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        if self.shape == "disc":
            if len(self.size) != 1:
                raise ConfigurationError("disc size is (radius,)")
        elif self.shape == "box":
            if len(self.size) != 2:
                raise ConfigurationError("box size is (half_w, half_h)")
        else:
            raise ConfigurationError(f"unknown shape {self.shape!r}")
        if min(self.size) <= 0:
            raise ConfigurationError("object sizes must be positive")

    def moved(self, delta) -> "Obj":
        return replace(self, position=(self.position[0] + float(delta[0]), self.position[1] + float(delta[1])))

    def distance(self, point) -> float:
        """Distance from ``point`` to the object's boundary (0 inside)."""
        p = np.asarray(point, float)
        c = np.array(self.position)
        if self.shape == "disc":
            return max(0.0, float(np.linalg.norm(p - c)) - self.size[0])
        h = np.array(self.size)
        return float(np.linalg.norm(np.maximum(np.abs(p - c) - h, 0.0)))


@dataclass(frozen=True)
class SimParams:
    omega_max: float = 0.15          # rad per step
    particle_radius: float = 0.012
    max_substep: float = 0.008       # max end-effector travel (m) per contact substep
    tool_radius: float | None = None


@dataclass(frozen=True, eq=False)
class WorldState:
    joints: tuple[float, ...]
    ee: tuple[float, float]
    objects: tuple[Obj, ...] = ()
    particles: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(float(q) for q in self.joints))
        object.__setattr__(self, "ee", (float(self.ee[0]), float(self.ee[1])))
        object.__setattr__(self, "objects", tuple(self.objects))
        p = np.array(self.particles, dtype=np.float64).reshape(-1, 2)
        p.flags.writeable = False
        object.__setattr__(self, "particles", p)

    def same_as(self, other: "WorldState") -> bool:
        return (self.joints == other.joints and self.ee == other.ee and self.objects == other.objects
                and self.t == other.t and np.array_equal(self.particles, other.particles))


def state_for(arm: ArmConfig, joints, objects=(), particles=None, t: int = 0) -> WorldState:
    q = arm.clamp(joints)
    return WorldState(tuple(q), tuple(end_effector(arm, q)), tuple(objects),
                      np.zeros((0, 2)) if particles is None else particles, t)


def _push_disc(obj: Obj, ee: np.ndarray, radius: float) -> Obj:
    c = np.array(obj.position)
    gap = radius + obj.size[0]
    d = c - ee
    dist = float(np.hypot(d[0], d[1]))
    if dist >= gap:
        return obj
    n = d / dist if dist > 1e-12 else np.array([1.0, 0.0])
    return obj.moved(ee + n * gap - c)


def _push_box(obj: Obj, ee: np.ndarray, radius: float) -> Obj:
    c = np.array(obj.position)
    h = np.array(obj.size)
    closest = np.clip(ee, c - h, c + h)
    d = closest - ee
    dist = float(np.hypot(d[0], d[1]))
    if dist >= radius:
        return obj
    if dist > 1e-12:
        return obj.moved(d / dist * (radius - dist))
    # disc centre inside the box: separate along the axis of least penetration
    rel = c - ee
    pen = h + radius - np.abs(rel)
    axis = int(np.argmin(pen))
    delta = np.zeros(2)
    delta[axis] = math.copysign(pen[axis], rel[axis] if rel[axis] != 0 else 1.0)
    return obj.moved(delta)


def _penetrates(obj: Obj, ee: np.ndarray, radius: float) -> bool:
    return obj.distance(ee) < radius - TOL


def _push_particles(particles: np.ndarray, ee: np.ndarray, gap: float) -> np.ndarray:
    if not len(particles):
        return particles
    d = particles - ee
    dist = np.hypot(d[:, 0], d[:, 1])
    hit = dist < gap
    if not hit.any():
        return particles
    out = particles.copy()
    safe = np.where(dist[hit] > 1e-12, dist[hit], 1.0)
    n = d[hit] / safe[:, None]
    n[dist[hit] <= 1e-12] = (1.0, 0.0)
    out[hit] = ee + n * gap
    return out


def step(state: WorldState, u, arm: ArmConfig, params: SimParams = SimParams()) -> WorldState:
    """Advance one control step towards joint targets ``u`` (clamped to limits)."""
    q0 = np.array(state.joints)
    target = arm.clamp(u)
    delta = np.clip(target - q0, -params.omega_max, params.omega_max)
    if not np.any(delta):
        return replace(state, t=state.t + 1)
    radius = params.tool_radius if params.tool_radius is not None else arm.ee_radius
    objects = list(state.objects)
    particles = state.particles
    if not objects and not len(particles):
        q = arm.clamp(q0 + delta)
        return state_for(arm, q, (), particles, state.t + 1)

    # bound on end-effector travel: sum of link lengths times cumulative joint motion
    travel = float(np.sum(np.array(arm.link_lengths) * np.abs(np.cumsum(delta))))
    n_sub = max(1, math.ceil(travel / params.max_substep))
    gap = radius + params.particle_radius
    q_prev = q0
    for s in range(1, n_sub + 1):
        q = arm.clamp(q0 + delta * (s / n_sub))
        ee = end_effector(arm, q)
        blockers = [o for o in objects if not o.movable and _penetrates(o, ee, radius)]
        if blockers:
            # bisect between the last free pose and this one to stop exactly at contact
            lo, hi = 0.0, 1.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                ee_mid = end_effector(arm, q_prev + (q - q_prev) * mid)
                if any(_penetrates(o, ee_mid, radius) for o in blockers):
                    hi = mid
                else:
                    lo = mid
            q = q_prev + (q - q_prev) * lo
            ee = end_effector(arm, q)
            objects = [_push(o, ee, radius) for o in objects]
            particles = _push_particles(particles, ee, gap)
            q_prev = q
            break
        objects = [_push(o, ee, radius) for o in objects]
        particles = _push_particles(particles, ee, gap)
        q_prev = q
    return state_for(arm, q_prev, objects, particles, state.t + 1)


def _push(obj: Obj, ee: np.ndarray, radius: float) -> Obj:
    if not obj.movable:
        return obj
    if obj.shape == "disc":
        return _push_disc(obj, ee, radius)
    return _push_box(obj, ee, radius)
