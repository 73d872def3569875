"""Experiment orchestration: demonstration, trial setup, learning and evaluation."""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..encoders import CONFIGS, C3DEncoder, baseline1, baseline2, load_weights
from ..errors import ConfigurationError
from ..learner import (
    EpisodicConfig,
    LearnResult,
    StoConfig,
    episodic_search,
    evaluate_policy,
    sto_optimize,
)
from ..renderer import SceneStyle, SetupTag, apply_setup, render_trajectory
from ..simworld.arm import ARM_VARIANTS, ArmConfig, reachable
from ..simworld.demos import scripted_demo
from ..simworld.tasks import TASK_KINDS, TaskSpec, default_task, rollout
from .config import ConfigReader

ENCODERS = ("proposed", "baseline1", "baseline2")
LEARNERS = ("sto", "episodic")
RESULT_COLUMNS = ("task", "setup", "encoder", "learner", "seed", "iteration_or_episode", "reward", "cost",
                  "completion")


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "reach"
    setup: SetupTag = SetupTag.V1
    encoder: str = "proposed"
    learner: str = "episodic"
    seeds: tuple[int, ...] = (0,)
    encoder_config: str = "desk"
    weights: Path | None = None
    output_dir: Path = Path("out")
    arm: str = "arm3"
    morph_arm: str = "arm4"
    v2_turns: int = 1
    v2_zoom: float = 1.2
    style: SceneStyle = SceneStyle()
    sto: StoConfig = StoConfig()
    episodic: EpisodicConfig = EpisodicConfig()
    baseline_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "setup", SetupTag(self.setup))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.task not in TASK_KINDS:
            raise ConfigurationError(f"unknown task {self.task!r}; choose from {TASK_KINDS}")
        if self.encoder not in ENCODERS:
            raise ConfigurationError(f"unknown encoder {self.encoder!r}; choose from {ENCODERS}")
        if self.learner not in LEARNERS:
            raise ConfigurationError(f"unknown learner {self.learner!r}; choose from {LEARNERS}")
        if self.encoder_config not in CONFIGS:
            raise ConfigurationError(f"unknown encoder_config {self.encoder_config!r}; choose from {tuple(CONFIGS)}")
        for name in (self.arm, self.morph_arm):
            if name not in ARM_VARIANTS:
                raise ConfigurationError(f"unknown arm {name!r}; choose from {tuple(ARM_VARIANTS)}")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")

    @property
    def label(self) -> str:
        return f"{self.task}_{self.setup.value}_{self.encoder}_{self.learner}"


@dataclass
class SeedRun:
    seed: int
    reward_trace: list[float]
    cost_trace: list[float]
    completion_trace: list[float]
    final_reward: float
    final_completion: float
    best_controls: np.ndarray
    demo_completion: float


@dataclass
class ExperimentRecord:
    config: ExperimentConfig
    demo_style: SceneStyle
    trial_style: SceneStyle
    runs: list[SeedRun] = field(default_factory=list)
    wall_clock: float = 0.0

    task = property(lambda self: self.config.task)
    setup = property(lambda self: self.config.setup.value)
    encoder = property(lambda self: self.config.encoder)
    learner = property(lambda self: self.config.learner)

    @property
    def completions(self) -> list[float]:
        return [r.final_completion for r in self.runs]

    def summary_rows(self) -> list[list]:
        rows = []
        for run in self.runs:
            last = len(run.reward_trace) - 1
            rows.append([self.task, self.setup, self.encoder, self.learner, run.seed, last,
                         repr(float(run.final_reward)), repr(float(run.final_reward) ** 2),
                         repr(float(run.final_completion))])
        return rows

    def trace_rows(self) -> list[list]:
        rows = []
        for run in self.runs:
            for i, (r, c, q) in enumerate(zip(run.reward_trace, run.cost_trace, run.completion_trace)):
                rows.append([self.task, self.setup, self.encoder, self.learner, run.seed, i,
                             repr(float(r)), repr(float(c)), repr(float(q))])
        return rows


def make_encoder(cfg: ExperimentConfig):
    enc_cfg = CONFIGS[cfg.encoder_config]()
    h, w = enc_cfg.input_h, enc_cfg.input_w
    if cfg.encoder == "proposed":
        if cfg.weights is None:
            raise ConfigurationError("the proposed encoder needs 'weights = <file>'")
        if not Path(cfg.weights).exists():
            raise ConfigurationError(f"weights file not found: {cfg.weights}")
        return C3DEncoder(enc_cfg, load_weights(cfg.weights, enc_cfg))
    if cfg.encoder == "baseline1":
        return baseline1(h, w, seed=cfg.baseline_seed)
    return baseline2(h, w)


def setup_styles(cfg: ExperimentConfig, seed: int) -> tuple[SceneStyle, SceneStyle, ArmConfig, ArmConfig]:
    """Demonstration style, trial style, demonstrator arm and learner arm for one seed."""
    base = cfg.style
    learner_arm = ARM_VARIANTS[cfg.arm]
    trial = apply_setup(base, cfg.setup, seed, v2_turns=cfg.v2_turns, v2_zoom=cfg.v2_zoom)
    if cfg.setup is SetupTag.M:
        demo_arm = ARM_VARIANTS[cfg.morph_arm]
        # reaching and pushing are demonstrated by a human hand, the rest by another arm
        demo_style = replace(base, skin="hand") if cfg.task in ("reach", "push") else base
        return demo_style, trial, demo_arm, learner_arm
    return base, trial, learner_arm, learner_arm


def check_task(task: TaskSpec, arms) -> None:
    points = [task.zone_center] + [o.position for o in task.objects] + [tuple(p) for p in task.particles]
    for arm in arms:
        for p in points:
            if not reachable(arm, p):
                raise ConfigurationError(f"{task.kind} task point {np.round(p, 3).tolist()} is unreachable for {arm.name}")


def _render(task, traj, arm, style):
    return render_trajectory(traj, arm, style, 16, zone=(task.zone_center, task.zone_radius))


def run_seed(cfg: ExperimentConfig, encoder, seed: int, task: TaskSpec | None = None) -> tuple[SeedRun, SceneStyle, SceneStyle]:
    task = task or default_task(cfg.task)
    demo_style, trial_style, demo_arm, arm = setup_styles(cfg, seed)
    demo_controls = scripted_demo(task, demo_arm, seed)
    demo_traj = rollout(task, demo_controls, demo_arm)
    demo_completion = evaluate_policy(task, demo_arm, demo_controls)
    demo_feature = np.asarray(encoder(_render(task, demo_traj, demo_arm, demo_style)), dtype=np.float64)
    if cfg.learner == "sto":
        result = sto_optimize(task, arm, demo_feature, encoder, trial_style, replace(cfg.sto, seed=seed))
        final_completion = evaluate_policy(task, arm, result.best_controls)
        final_reward = result.reward_trace[-1]
    else:
        result = episodic_search(task, arm, demo_feature, encoder, trial_style, replace(cfg.episodic, seed=seed))
        # the top-k policies are averaged, as in the reporting protocol
        final_completion = float(np.mean([evaluate_policy(task, arm, c) for _, c in result.top_policies]))
        final_reward = float(np.mean([r for r, _ in result.top_policies]))
    completions = [evaluate_policy(task, arm, c) for c in result.trace_controls]
    run = SeedRun(seed, list(result.reward_trace), list(result.cost_trace), completions, final_reward,
                  final_completion, result.best_controls, demo_completion)
    return run, demo_style, trial_style


def run_experiment(cfg: ExperimentConfig, encoder=None, task: TaskSpec | None = None) -> ExperimentRecord:
    """Learn the task once per seed and evaluate. Validates the task before any learning."""
    task = task or default_task(cfg.task)
    _, _, demo_arm, arm = setup_styles(cfg, cfg.seeds[0])
    check_task(task, {demo_arm.name: demo_arm, arm.name: arm}.values())
    encoder = encoder or make_encoder(cfg)
    start = time.perf_counter()
    runs = []
    demo_style = trial_style = cfg.style
    for seed in cfg.seeds:
        run, demo_style, trial_style = run_seed(cfg, encoder, seed, task)
        runs.append(run)
    return ExperimentRecord(cfg, demo_style, trial_style, runs, time.perf_counter() - start)


def write_rows(path: str | os.PathLike, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        w.writerows(rows)
    return path


def read_rows(path: str | os.PathLike) -> list[dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"results file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(RESULT_COLUMNS) - set(rows[0]):
        raise ConfigurationError(f"{path} lacks columns {sorted(set(RESULT_COLUMNS) - set(rows[0]))}")
    return rows


@dataclass
class TraceRun:
    reward_trace: list[float]
    completion_trace: list[float]


@dataclass
class TraceRecord:
    """Minimal record rebuilt from a traces CSV, enough for correlate_table."""
    task: str
    setup: str
    encoder: str
    runs: list[TraceRun]


def records_from_traces(rows) -> list[TraceRecord]:
    grouped: dict[tuple, dict[str, TraceRun]] = {}
    for r in rows:
        key = (r["task"], r["setup"], r["encoder"])
        run_key = f"{r['learner']}:{r['seed']}"
        run = grouped.setdefault(key, {}).setdefault(run_key, TraceRun([], []))
        run.reward_trace.append(float(r["reward"]))
        run.completion_trace.append(float(r["completion"]))
    return [TraceRecord(*key, list(runs.values())) for key, runs in sorted(grouped.items())]


def experiment_config_from(reader: ConfigReader, task: str | None = None, setup: str | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from config keys (see the README for the list)."""
    sto_default, epi_default = StoConfig(), EpisodicConfig()
    sto = StoConfig(
        num_samples=reader.int("sto.num_samples", sto_default.num_samples),
        iterations=reader.int("sto.iterations", sto_default.iterations),
        noise_sigma=reader.float("sto.noise_sigma", sto_default.noise_sigma),
        elitist=reader.bool("sto.elitist", sto_default.elitist),
    )
    steps = reader.int("episodic.steps_per_episode", None)
    epi = EpisodicConfig(
        runs=reader.int("episodic.runs", epi_default.runs),
        episodes_per_run=reader.int("episodic.episodes_per_run", epi_default.episodes_per_run),
        steps_per_episode=steps,
        population=reader.int("episodic.population", epi_default.population),
        elite_fraction=reader.float("episodic.elite_fraction", epi_default.elite_fraction),
        keyframes=reader.int("episodic.keyframes", epi_default.keyframes),
        init_sigma=reader.float("episodic.init_sigma", epi_default.init_sigma),
        min_sigma=reader.float("episodic.min_sigma", epi_default.min_sigma),
        smoothing=reader.float("episodic.smoothing", epi_default.smoothing),
        top_k=reader.int("episodic.top_k", epi_default.top_k),
    )
    style = SceneStyle.from_config(reader.section("style"))
    enc_name = reader.str("encoder_config", "desk")
    if enc_name in CONFIGS and "style.height" not in reader.values and "style.width" not in reader.values:
        enc = CONFIGS[enc_name]()
        style = replace(style, height=enc.input_h, width=enc.input_w)
    try:
        setup_tag = SetupTag(setup or reader.str("setup", "V1"))
    except ValueError:
        raise ConfigurationError(f"unknown setup {setup or reader.str('setup')!r}; choose from "
                                 f"{[t.value for t in SetupTag]}") from None
    return ExperimentConfig(
        task=task or reader.str("task", "reach"),
        setup=setup_tag,
        encoder=reader.str("encoder", "proposed"),
        learner=reader.str("learner", "episodic"),
        seeds=tuple(reader.list("seeds", [0], int)),
        encoder_config=enc_name,
        weights=reader.path("weights"),
        output_dir=reader.path("output_dir", "out"),
        arm=reader.str("arm", "arm3"),
        morph_arm=reader.str("morph_arm", "arm4"),
        v2_turns=reader.int("v2.turns", 1),
        v2_zoom=reader.float("v2.zoom", 1.2),
        style=style,
        sto=sto,
        episodic=epi,
        baseline_seed=reader.int("baseline1.seed", 0),
    )
