"""Perceptual reward: negative Euclidean distance between activity features."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .clipcore import VideoClip
from .errors import InputError, UsageError


def _pair(x_d, x_r) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x_d, dtype=np.float64).ravel()
    b = np.asarray(x_r, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise UsageError(f"feature dimensions differ: {a.size} vs {b.size}")
    return a, b


def reward(x_d, x_r) -> float:
    """``-||x_d - x_r||_2``; zero only for identical features."""
    a, b = _pair(x_d, x_r)
    d = np.abs(a - b)
    scale = float(d.max()) if d.size else 0.0
    if scale == 0.0:
        return 0.0
    # rescaling keeps tiny but distinct features from underflowing to a zero distance
    return 0.0 - scale * float(np.sqrt(np.sum((d / scale) ** 2)))


def cost(x_d, x_r) -> float:
    """Squared distance, the quantity trajectory optimisation minimises (equals ``reward ** 2``)."""
    a, b = _pair(x_d, x_r)
    d = a - b
    return float(d @ d)


def reward_profile(demo: VideoClip, trial: VideoClip, encoder, window: int = 16, stride: int = 1) -> list[float]:
    """Rewards of aligned sliding windows: window ``s`` covers frames ``s .. s+window-1`` of both clips."""
    if window < 1 or stride < 1:
        raise InputError("window and stride must be positive")
    shortest = min(len(demo), len(trial))
    if shortest < window:
        raise InputError(f"clips need at least {window} frames, shortest has {shortest}")
    out = []
    for s in range(0, shortest - window + 1, stride):
        a = encoder(VideoClip(demo.frames[s:s + window], demo.fps))
        b = encoder(VideoClip(trial.frames[s:s + window], trial.fps))
        out.append(reward(a, b))
    return out


def write_profile_csv(values, path: str | os.PathLike, stride: int = 1) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window_start", "reward"])
        for i, r in enumerate(values):
            w.writerow([i * stride, repr(float(r))])
    return path
