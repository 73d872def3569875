from .arm import ARM_VARIANTS, ArmConfig, end_effector, fk, ik, reachable
from .demos import plan_waypoints, scripted_demo
from .tasks import (
    TASK_KINDS,
    TaskSpec,
    completion_details,
    default_task,
    random_task,
    rollout,
    task_completion,
    write_trajectory_csv,
)
from .world import Obj, SimParams, WorldState, state_for, step

__all__ = [
    "ARM_VARIANTS", "ArmConfig", "Obj", "SimParams", "TASK_KINDS", "TaskSpec", "WorldState",
    "completion_details", "default_task", "end_effector", "fk", "ik", "plan_waypoints",
    "random_task", "reachable", "rollout", "scripted_demo", "state_for", "step", "task_completion",
    "write_trajectory_csv",
]
