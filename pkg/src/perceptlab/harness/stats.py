"""Correlation statistics between perceptual reward and task completion."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InputError, UndefinedCorrelationError


def pearson(x, y) -> float:
    """Sample Pearson correlation; undefined (raises) when either input is constant."""
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.size != b.size:
        raise InputError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise InputError("pearson needs at least two pairs")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InputError("pearson inputs must be finite")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0.0 or sb == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant input")
    return float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))


@dataclass(frozen=True)
class CorrelationCell:
    task: str
    setup: str
    encoder: str
    mean_r: float | None       # None: undefined
    std_r: float | None
    n_runs: int

    @property
    def defined(self) -> bool:
        return self.mean_r is not None

    def formatted(self) -> str:
        if not self.defined:
            return "undefined"
        return f"{self.mean_r:.4f} ± {self.std_r:.4f}"


def summarize(rs) -> tuple[float, float]:
    """Mean and sample standard deviation (ddof=1; 0 for a single value)."""
    rs = np.asarray(rs, dtype=np.float64)
    std = float(rs.std(ddof=1)) if rs.size > 1 else 0.0
    return float(rs.mean()), std


def correlate_cell(task: str, setup: str, encoder: str, runs) -> CorrelationCell:
    """``runs`` is a list of ``(reward_trace, completion_trace)`` pairs.

    Runs whose correlation is undefined are skipped; with fewer than two
    defined runs the cell itself is undefined.
    """
    rs = []
    for rewards, completions in runs:
        try:
            rs.append(pearson(rewards, completions))
        except (UndefinedCorrelationError, InputError):
            continue
    if len(rs) < 2:
        return CorrelationCell(task, setup, encoder, None, None, len(rs))
    mean, std = summarize(rs)
    return CorrelationCell(task, setup, encoder, mean, std, len(rs))


def correlate_table(records) -> list[CorrelationCell]:
    """One cell per (task, setup, encoder) over the per-seed traces of ``records``."""
    groups: dict[tuple[str, str, str], list] = {}
    for rec in records:
        key = (rec.task, rec.setup, rec.encoder)
        groups.setdefault(key, []).extend((run.reward_trace, run.completion_trace) for run in rec.runs)
    return [correlate_cell(*key, runs) for key, runs in sorted(groups.items())]


def write_correlation_csv(cells, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task", "setup", "encoder", "mean_r", "std_r", "n_runs"])
        for c in cells:
            if c.defined:
                w.writerow([c.task, c.setup, c.encoder, repr(c.mean_r), repr(c.std_r), c.n_runs])
            else:
                w.writerow([c.task, c.setup, c.encoder, "undefined", "undefined", c.n_runs])
    return path


def format_table(cells) -> str:
    """Plain-text table, one line per cell."""
    lines = [f"{'task':8} {'setup':6} {'encoder':10} r"]
    for c in cells:
        lines.append(f"{c.task:8} {c.setup:6} {c.encoder:10} {c.formatted()}")
    return "\n".join(lines)
