"""Planar serial arm: forward kinematics and damped-least-squares IK."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True)
class ArmConfig:
    link_lengths: tuple[float, ...] = (0.3, 0.3, 0.3)
    joint_limits: tuple[tuple[float, float], ...] = ((-math.pi, math.pi), (-2.6, 2.6), (-2.6, 2.6))
    base: tuple[float, float] = (0.0, 0.0)
    link_width: float = 0.045
    ee_radius: float = 0.03
    name: str = "arm3"

    def __post_init__(self):
        object.__setattr__(self, "link_lengths", tuple(float(v) for v in self.link_lengths))
        object.__setattr__(self, "joint_limits", tuple((float(a), float(b)) for a, b in self.joint_limits))
        object.__setattr__(self, "base", (float(self.base[0]), float(self.base[1])))
        if not self.link_lengths:
            raise ConfigurationError("arm needs at least one link")
        if min(self.link_lengths) <= 0:
            raise ConfigurationError("link lengths must be positive")
        if len(self.joint_limits) != len(self.link_lengths):
            raise ConfigurationError("one joint limit pair per link required")
        if any(lo > hi for lo, hi in self.joint_limits):
            raise ConfigurationError("joint limits must be ordered [min, max]")

    @property
    def dof(self) -> int:
        return len(self.link_lengths)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.joint_limits])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.joint_limits])

    def clamp(self, joints) -> np.ndarray:
        return np.clip(np.asarray(joints, dtype=np.float64), self.lower, self.upper)

    @property
    def reach(self) -> float:
        return float(sum(self.link_lengths))

    @property
    def inner_reach(self) -> float:
        longest = max(self.link_lengths)
        return max(0.0, longest - (self.reach - longest))


ARM_VARIANTS = {
    "arm3": ArmConfig(),
    "arm2": ArmConfig((0.45, 0.42), ((-math.pi, math.pi), (-2.8, 2.8)), link_width=0.06, name="arm2"),
    "arm4": ArmConfig((0.26, 0.24, 0.22, 0.2), ((-math.pi, math.pi),) + ((-2.4, 2.4),) * 3,
                      link_width=0.035, name="arm4"),
}


def fk(arm: ArmConfig, joints) -> np.ndarray:
    """Joint positions from the base out; the last row is the end-effector. Shape ``(dof + 1, 2)``."""
    q = np.asarray(joints, dtype=np.float64)
    if q.shape != (arm.dof,):
        raise ConfigurationError(f"expected {arm.dof} joint angles, got shape {q.shape}")
    theta = np.cumsum(q)
    steps = np.stack([np.cos(theta), np.sin(theta)], axis=1) * np.array(arm.link_lengths)[:, None]
    pts = np.vstack([np.zeros(2), np.cumsum(steps, axis=0)])
    return pts + np.array(arm.base)


def end_effector(arm: ArmConfig, joints) -> np.ndarray:
    return fk(arm, joints)[-1]


def jacobian(arm: ArmConfig, joints) -> np.ndarray:
    q = np.asarray(joints, dtype=np.float64)
    theta = np.cumsum(q)
    lengths = np.array(arm.link_lengths)
    dx = -lengths * np.sin(theta)
    dy = lengths * np.cos(theta)
    # joint j moves every link from j outward
    return np.stack([np.cumsum(dx[::-1])[::-1], np.cumsum(dy[::-1])[::-1]])


def reachable(arm: ArmConfig, point, margin: float = 0.01) -> bool:
    r = float(np.linalg.norm(np.asarray(point, float) - np.array(arm.base)))
    return arm.inner_reach + margin <= r <= arm.reach - margin


def ik(arm: ArmConfig, target, seed_joints, damping: float = 0.05, iters: int = 200,
       tol: float = 1e-5, rest=None, rest_gain: float = 0.0) -> np.ndarray:
    """Damped least-squares position IK from ``seed_joints``, respecting joint limits.

    ``rest`` with ``rest_gain > 0`` biases redundant arms towards a rest posture
    through the Jacobian null space.
    """
    q = arm.clamp(seed_joints)
    target = np.asarray(target, dtype=np.float64)
    lam2 = damping ** 2
    for _ in range(iters):
        err = target - end_effector(arm, q)
        if np.linalg.norm(err) < tol:
            break
        J = jacobian(arm, q)
        JJt = J @ J.T + lam2 * np.eye(2)
        dq = J.T @ np.linalg.solve(JJt, err)
        if rest is not None and rest_gain > 0:
            null = np.eye(arm.dof) - J.T @ np.linalg.solve(JJt, J)
            dq += rest_gain * null @ (np.asarray(rest) - q)
        step = np.max(np.abs(dq))
        if step > 0.2:
            dq *= 0.2 / step
        q = arm.clamp(q + dq)
    return q
