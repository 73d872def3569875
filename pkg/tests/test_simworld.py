import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import fk_brute

from perceptlab.errors import ConfigurationError
from perceptlab.simworld import (
    ARM_VARIANTS,
    TASK_KINDS,
    ArmConfig,
    Obj,
    SimParams,
    TaskSpec,
    default_task,
    fk,
    ik,
    random_task,
    rollout,
    scripted_demo,
    state_for,
    step,
    task_completion,
    write_trajectory_csv,
)
from perceptlab.simworld.tasks import completion_details
from perceptlab.simworld.world import _push_disc

ARM = ARM_VARIANTS["arm3"]


def test_fk_examples():
    np.testing.assert_allclose(fk(ARM, [0, 0, 0])[-1], [0.9, 0.0], atol=1e-12)
    np.testing.assert_allclose(fk(ARM, [math.pi / 2, 0, 0])[-1], [0.0, 0.9], atol=1e-12)
    shifted = ArmConfig(base=(1.0, -2.0))
    np.testing.assert_allclose(fk(shifted, [0, 0, 0])[-1], [1.9, -2.0], atol=1e-12)


@given(st.sampled_from(list(ARM_VARIANTS)), st.data())
@settings(max_examples=60)
def test_fk_matches_oracle(name, data):
    arm = ARM_VARIANTS[name]
    q = [data.draw(st.floats(lo, hi)) for lo, hi in arm.joint_limits]
    np.testing.assert_allclose(fk(arm, q), fk_brute(arm.link_lengths, q, arm.base), atol=1e-9)


def test_ik_reaches_target():
    for arm in ARM_VARIANTS.values():
        q = ik(arm, (-0.2, 0.5), np.array([2.0] + [-1.0] * (arm.dof - 1)))
        np.testing.assert_allclose(fk(arm, q)[-1], (-0.2, 0.5), atol=1e-4)


def test_step_hold_is_unchanged():
    task = default_task("push")
    s0 = task.initial
    s1 = step(s0, s0.joints, ARM, task.sim_params())
    assert s1.joints == s0.joints and s1.objects == s0.objects and s1.ee == s0.ee


def test_push_disc_restores_tangency():
    disc = Obj("disc", (0.07, 0.0), (0.05,))
    pushed = _push_disc(disc, np.array([0.0, 0.0]), 0.03)   # overlap 0.01 along +x
    assert pushed.position == pytest.approx((0.08, 0.0))


def test_joint_limit_is_exact():
    s = state_for(ARM, (0.0, 2.5, 0.0))
    for _ in range(5):
        s = step(s, (0.0, 9.0, 0.0), ARM)
    assert s.joints[1] == 2.6


def test_speed_cap():
    s = state_for(ARM, (0.0, 0.0, 0.0))
    s1 = step(s, (1.0, -1.0, 0.05), ARM, SimParams(omega_max=0.15))
    assert s1.joints == pytest.approx((0.15, -0.15, 0.05))


def test_rollout_lengths_and_determinism():
    task = default_task("reach")
    assert len(rollout(task, [], ARM)) == 1
    controls = np.random.default_rng(0).normal(size=(7, 3))
    a, b = rollout(task, controls, ARM), rollout(task, controls, ARM)
    assert len(a) == 8 and all(x.same_as(y) for x, y in zip(a, b))
    with pytest.raises(ConfigurationError):
        rollout(task, np.zeros((61, 3)), ARM)


def test_completion_examples():
    task = default_task("reach")
    assert task_completion(task, rollout(task, [], ARM)) == 0.0
    zone_task = task.with_(zone_center=tuple(task.initial.ee))
    assert task_completion(zone_task, rollout(zone_task, [], ARM)) == 1.0   # d_i = d_f = 0
    sweep = default_task("sweep")
    inside = sweep.with_(particles=np.tile(sweep.zone_center, (4, 1)))
    assert task_completion(inside, rollout(inside, [], ARM)) == 1.0
    half = inside.with_(particles=np.array([sweep.zone_center, sweep.zone_center, (5.0, 5.0), (5.0, 5.0)]))
    assert task_completion(half, rollout(half, [], ARM)) == 0.5


def test_malformed_tasks_rejected():
    with pytest.raises(ConfigurationError):
        TaskSpec("push", (0, 0.5), 0.05)
    with pytest.raises(ConfigurationError):
        TaskSpec("sweep", (0, 0.5), 0.05)
    with pytest.raises(ConfigurationError):
        TaskSpec("dance", (0, 0.5), 0.05)


@pytest.mark.parametrize("kind", TASK_KINDS)
@pytest.mark.parametrize("arm_name", list(ARM_VARIANTS))
def test_scripted_demo_completes_task(kind, arm_name):
    arm = ARM_VARIANTS[arm_name]
    task = default_task(kind)
    controls = scripted_demo(task, arm, seed=1)
    assert controls.shape == (task.max_steps, arm.dof)
    traj = rollout(task, controls, arm)
    score = task_completion(task, traj)
    assert score >= 0.9
    if kind == "reach":
        assert score >= 0.95
    if kind == "push":
        obj = next(o for o in traj[-1].objects if o.tag == "object")
        assert np.linalg.norm(np.array(obj.position) - task.zone_center) < task.zone_radius


def test_scripted_demo_deterministic_and_unreachable():
    task = default_task("push")
    assert np.array_equal(scripted_demo(task, ARM, 3), scripted_demo(task, ARM, 3))
    far = default_task("reach").with_(zone_center=(2.0, 2.0))
    with pytest.raises(ConfigurationError):
        scripted_demo(far, ARM, 0)


def test_random_tasks_are_solvable_mostly():
    rng = np.random.default_rng(0)
    scores = []
    for kind in ("reach", "push", "hammer", "strike"):
        for i in range(3):
            task = random_task(kind, rng)
            scores.append(task_completion(task, rollout(task, scripted_demo(task, ARM, i), ARM)))
    assert np.mean(scores) > 0.9


@given(st.sampled_from(TASK_KINDS), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_rollout_invariants(kind, seed):
    task = default_task(kind)
    rng = np.random.default_rng(seed)
    q0 = np.array(task.initial.joints)
    controls = q0 + np.cumsum(rng.normal(0, 0.3, size=(25, 3)), axis=0)
    traj = rollout(task, controls, ARM)
    radius = task.tool_radius
    for s in traj:
        assert np.all(np.array(s.joints) >= ARM.lower) and np.all(np.array(s.joints) <= ARM.upper)
        for o in s.objects:
            # movable objects are pushed to tangency, immovable ones block the tool
            assert o.distance(s.ee) >= radius - 1e-9
    details = completion_details(task, traj)
    assert 0.0 <= details["score"] <= 1.0


def test_objects_do_not_drift_without_contact():
    task = default_task("strike")
    traj = rollout(task, [task.initial.joints] * 10, ARM)
    assert all(s.objects == task.objects for s in traj)


def test_trajectory_csv(tmp_path):
    task = default_task("push")
    traj = rollout(task, scripted_demo(task, ARM, 0)[:3], ARM)
    path = write_trajectory_csv(traj, tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "step,q0,q1,q2,ee_x,ee_y,obj0_x,obj0_y"
    assert len(lines) == 5
