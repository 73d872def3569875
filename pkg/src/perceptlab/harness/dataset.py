"""Synthetic activity dataset: scripted demonstrations rendered under random styles."""

from __future__ import annotations

import csv
import os
import shutil
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..clipcore import VideoClip, load_clip, save_clip
from ..errors import ConfigurationError, FormatError
from ..renderer import SceneStyle, random_style, render_trajectory
from ..simworld.arm import ARM_VARIANTS
from ..simworld.demos import scripted_demo
from ..simworld.tasks import TASK_KINDS, default_task, random_task, rollout


@dataclass(frozen=True)
class DatasetSpec:
    per_class: int = 40
    height: int = 56
    width: int = 56
    n_frames: int = 16
    seed: int = 0
    morph_fraction: float = 0.3     # share of clips demonstrated by a non-default arm
    kinds: tuple[str, ...] = TASK_KINDS

    def __post_init__(self):
        if self.per_class < 1:
            raise ConfigurationError("dataset.per_class must be at least 1")
        for k in self.kinds:
            if k not in TASK_KINDS:
                raise ConfigurationError(f"unknown task kind {k!r}")


def _one_clip(kind: str, rng: np.random.Generator, spec: DatasetSpec) -> VideoClip:
    arm = ARM_VARIANTS["arm3"]
    if rng.random() < spec.morph_fraction:
        arm = ARM_VARIANTS[("arm2", "arm4")[int(rng.integers(2))]]
    task = random_task(kind, rng, arm)
    demo_seed = int(rng.integers(2 ** 31))
    try:
        controls = scripted_demo(task, arm, demo_seed)
    except ConfigurationError:
        task = default_task(kind)
        controls = scripted_demo(task, arm, demo_seed)
    traj = rollout(task, controls, arm)
    style = replace(random_style(rng), height=spec.height, width=spec.width)
    return render_trajectory(traj, arm, style, spec.n_frames, zone=(task.zone_center, task.zone_radius))


def build_synthetic_dataset(spec: DatasetSpec = DatasetSpec()) -> list[tuple[VideoClip, int]]:
    """Class-balanced ``(clip, label)`` pairs; label ``k`` is ``spec.kinds[k]``.

    Every clip is seeded from ``(seed, class, index)`` alone, so any subset
    of the dataset can be regenerated independently.
    """
    out = []
    for label, kind in enumerate(spec.kinds):
        for j in range(spec.per_class):
            rng = np.random.default_rng([spec.seed, label, j])
            out.append((_one_clip(kind, rng, spec), label))
    return out


def save_dataset(dataset, directory: str | os.PathLike, kinds=TASK_KINDS) -> Path:
    directory = Path(directory)
    if (directory / "clips").exists():
        shutil.rmtree(directory / "clips")
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "labels.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["clip", "label", "kind"])
        for i, (clip, label) in enumerate(dataset):
            name = f"{i:05d}"
            save_clip(clip, directory / "clips" / name)
            w.writerow([name, label, kinds[label]])
    return directory


def load_dataset(directory: str | os.PathLike) -> list[tuple[VideoClip, int]]:
    directory = Path(directory)
    labels = directory / "labels.csv"
    if not labels.exists():
        raise FormatError(f"dataset directory {directory} has no labels.csv")
    with open(labels, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return [(load_clip(directory / "clips" / r["clip"]), int(r["label"])) for r in rows]
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed labels.csv in {directory}: {exc}") from None
