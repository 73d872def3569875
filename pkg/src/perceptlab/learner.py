"""Learning control sequences from the perceptual reward alone.

Two learners share one evaluation path: roll the controls out, render the
trajectory into a 16-frame clip, encode it and compare against the
demonstration feature. Neither learner ever sees the task-completion score.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UsageError
from .renderer import SceneStyle, render_trajectory
from .reward import cost, reward
from .simworld import tasks as _tasks
from .simworld.arm import ArmConfig
from .simworld.tasks import TaskSpec, rollout
from .simworld.world import SimParams


@dataclass(frozen=True)
class StoConfig:
    num_samples: int = 8
    iterations: int = 10
    noise_sigma: float = 0.1
    seed: int = 0
    elitist: bool = True

    def __post_init__(self):
        if self.num_samples < 1 or self.iterations < 1:
            raise ConfigurationError("num_samples and iterations must be at least 1")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be non-negative")


@dataclass(frozen=True)
class EpisodicConfig:
    runs: int = 10
    episodes_per_run: int = 20
    steps_per_episode: int | None = None   # None: the task horizon
    population: int = 4                    # episodes per distribution update
    elite_fraction: float = 0.25
    keyframes: int = 3
    init_sigma: float = 0.8
    min_sigma: float = 0.05
    smoothing: float = 0.7
    top_k: int = 2
    pin_start: bool = True                 # first keyframe fixed at the initial pose
    seed: int = 0

    def __post_init__(self):
        for name in ("runs", "episodes_per_run", "population", "keyframes", "top_k"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1")
        if self.steps_per_episode is not None and self.steps_per_episode < 1:
            raise ConfigurationError("steps_per_episode must be at least 1")
        if not 0 < self.elite_fraction <= 1 or not 0 < self.smoothing <= 1:
            raise ConfigurationError("elite_fraction and smoothing must lie in (0, 1]")
        if self.init_sigma < 0 or self.min_sigma < 0:
            raise ConfigurationError("sigmas must be non-negative")


@dataclass
class LearnResult:
    best_controls: np.ndarray
    cost_trace: list[float]                      # per iteration (STO) or per episode
    reward_trace: list[float]                    # per iteration (STO) or per episode
    trace_controls: list[np.ndarray]             # the sequence each trace entry was measured on
    top_policies: list[tuple[float, np.ndarray]] = field(default_factory=list)
    run_index: list[int] = field(default_factory=list)  # episodic: run of each trace entry

    def write_csv(self, path: str | os.PathLike, label: str = "iteration") -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([label, "cost", "reward"])
            for i, (c, r) in enumerate(zip(self.cost_trace, self.reward_trace)):
                w.writerow([i, repr(float(c)), repr(float(r))])
        return path


def worker_count() -> int:
    raw = os.environ.get("PERCEPT_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"PERCEPT_LAB_THREADS must be an integer, got {raw!r}") from None


def _map(fn, items: list) -> list:
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def feature_of(task: TaskSpec, arm: ArmConfig, controls, encoder, style: SceneStyle | None,
               n_frames: int = 16, params: SimParams = SimParams()) -> np.ndarray:
    """Roll out, render and encode. ``style=None`` hands the raw trajectory to the encoder."""
    traj = rollout(task, controls, arm, params)
    if style is None:
        return np.asarray(encoder(traj), dtype=np.float64)
    clip = render_trajectory(traj, arm, style, n_frames, zone=(task.zone_center, task.zone_radius))
    return np.asarray(encoder(clip), dtype=np.float64)


def hold_controls(task: TaskSpec, arm: ArmConfig, steps: int | None = None) -> np.ndarray:
    """Every control equal to the initial pose."""
    q0 = np.array(task.initial_state(arm).joints)
    return np.tile(q0, (steps or task.max_steps, 1))


def _check_dims(demo_feature, encoder) -> np.ndarray:
    demo = np.asarray(demo_feature, dtype=np.float64).ravel()
    dim = getattr(encoder, "dim", None)
    if dim is not None and dim != demo.size:
        raise UsageError(f"encoder produces {dim}-d features but the demonstration feature has {demo.size}")
    return demo


def sto_optimize(task: TaskSpec, arm: ArmConfig, demo_feature, encoder, style: SceneStyle | None,
                 cfg: StoConfig = StoConfig(), init=None) -> LearnResult:
    """Stochastic trajectory optimisation: perturb, evaluate and keep the cheapest sequence.

    The traces hold one entry per iteration: index 0 is the initial candidate,
    entry ``k`` the candidate after iteration ``k``.
    """
    demo = _check_dims(demo_feature, encoder)
    cand = hold_controls(task, arm) if init is None else np.array(init, dtype=np.float64).reshape(-1, arm.dof)
    if len(cand) != task.max_steps:
        raise UsageError(f"initial sequence has {len(cand)} controls, task horizon is {task.max_steps}")

    def evaluate(controls):
        f = feature_of(task, arm, controls, encoder, style)
        if f.shape != demo.shape:
            raise UsageError(f"encoder produced {f.size}-d features, demonstration has {demo.size}")
        return cost(demo, f), reward(demo, f)

    c_best, r_best = evaluate(cand)
    costs, rewards, seqs = [c_best], [r_best], [cand.copy()]
    for it in range(cfg.iterations):
        samples = []
        for s in range(cfg.num_samples):
            rng = np.random.default_rng([cfg.seed, it, s])
            samples.append(cand + rng.normal(0.0, cfg.noise_sigma, size=cand.shape))
        results = _map(evaluate, samples)
        pool = list(zip(results, samples))
        if cfg.elitist:
            pool.insert(0, ((c_best, r_best), cand))
        (c_best, r_best), cand = min(pool, key=lambda item: item[0][0])
        costs.append(c_best)
        rewards.append(r_best)
        seqs.append(cand.copy())
    return LearnResult(cand, costs, rewards, seqs, [(r_best, cand)])


def keyframe_controls(keys: np.ndarray, steps: int) -> np.ndarray:
    """Linearly interpolate ``(K, dof)`` keyframes, evenly spaced over ``steps`` controls."""
    keys = np.asarray(keys, dtype=np.float64)
    if len(keys) == 1:
        return np.repeat(keys, steps, axis=0)
    knots = np.linspace(0.0, steps - 1, len(keys))
    t = np.arange(steps)
    return np.stack([np.interp(t, knots, keys[:, j]) for j in range(keys.shape[1])], axis=1)


def _sample_keys(rng: np.random.Generator, mean: np.ndarray, sigma: np.ndarray, arm: ArmConfig,
                 pin: np.ndarray | None = None) -> np.ndarray:
    keys = np.clip(mean + rng.normal(size=mean.shape) * sigma, arm.lower, arm.upper)
    if pin is not None:
        keys[0] = pin
    return keys


def episodic_search(task: TaskSpec, arm: ArmConfig, demo_feature, encoder, style: SceneStyle | None,
                    cfg: EpisodicConfig = EpisodicConfig()) -> LearnResult:
    """Repeated cross-entropy search over keyframed control sequences.

    Each run starts from a distribution centred on the initial pose and, after
    every ``population`` episodes, moves it towards the best-rewarded quarter.
    The result keeps every episode's reward and controls plus the best policy
    of the ``top_k`` best runs.
    """
    demo = _check_dims(demo_feature, encoder)
    steps = cfg.steps_per_episode or task.max_steps
    if steps > task.max_steps:
        raise UsageError(f"{steps} steps per episode exceed the task horizon {task.max_steps}")
    q0 = np.array(task.initial_state(arm).joints)
    n_elite = max(1, int(round(cfg.population * cfg.elite_fraction)))
    pin = q0 if cfg.pin_start else None

    def evaluate(keys):
        f = feature_of(task, arm, keyframe_controls(keys, steps), encoder, style)
        if f.shape != demo.shape:
            raise UsageError(f"encoder produced {f.size}-d features, demonstration has {demo.size}")
        return reward(demo, f)

    rewards, seqs, runs = [], [], []
    run_best = []
    for run in range(cfg.runs):
        rng = np.random.default_rng([cfg.seed, run])
        mean = np.tile(q0, (cfg.keyframes, 1))
        sigma = np.full_like(mean, cfg.init_sigma)
        best = (-np.inf, None)
        done = 0
        while done < cfg.episodes_per_run:
            n = min(cfg.population, cfg.episodes_per_run - done)
            batch = [_sample_keys(rng, mean, sigma, arm, pin) for _ in range(n)]
            rs = _map(evaluate, batch)
            for r, keys in zip(rs, batch):
                controls = keyframe_controls(keys, steps)
                rewards.append(r)
                seqs.append(controls)
                runs.append(run)
                if r > best[0]:
                    best = (r, controls)
            order = np.argsort(rs, kind="stable")[::-1][:min(n_elite, n)]
            elite = np.array([batch[i] for i in order])
            a = cfg.smoothing
            mean = (1 - a) * mean + a * elite.mean(axis=0)
            spread = elite.std(axis=0) if len(elite) > 1 else sigma * 0.5
            sigma = np.maximum((1 - a) * sigma + a * spread, cfg.min_sigma)
            done += n
        run_best.append(best)
    ranked = sorted(run_best, key=lambda rb: rb[0], reverse=True)[:cfg.top_k]
    costs = [r * r for r in rewards]
    return LearnResult(ranked[0][1], costs, rewards, seqs, list(ranked), runs)


def random_policy_search(task: TaskSpec, arm: ArmConfig, cfg: EpisodicConfig = EpisodicConfig()) -> list[np.ndarray]:
    """Equal-budget uninformed baseline: one policy per episode, all drawn from the initial search distribution.

    Without a reward there is nothing to select on, so every policy counts.
    """
    steps = cfg.steps_per_episode or task.max_steps
    q0 = np.array(task.initial_state(arm).joints)
    mean = np.tile(q0, (cfg.keyframes, 1))
    sigma = np.full_like(mean, cfg.init_sigma)
    policies = []
    for run in range(cfg.runs):
        for ep in range(cfg.episodes_per_run):
            rng = np.random.default_rng([cfg.seed, run, ep, 7919])
            keys = _sample_keys(rng, mean, sigma, arm, q0 if cfg.pin_start else None)
            policies.append(keyframe_controls(keys, steps))
    return policies


def evaluate_policy(task: TaskSpec, arm: ArmConfig, controls, params: SimParams = SimParams()) -> float:
    """Task completion of ``controls``; evaluation only, never called by the learners."""
    return _tasks.task_completion(task, rollout(task, controls, arm, params))


def top_k_completion(task: TaskSpec, arm: ArmConfig, result: LearnResult) -> float:
    """Mean completion of the top-k policies."""
    return float(np.mean([evaluate_policy(task, arm, c) for _, c in result.top_policies]))


def end_effector_surrogate(traj) -> np.ndarray:
    """Analytic stand-in encoder: the final end-effector position (use with ``style=None``)."""
    return np.array(traj[-1].ee, dtype=np.float64)


end_effector_surrogate.dim = 2
