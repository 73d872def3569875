"""Minimal dependency-free SVG line plots (deterministic text output)."""

from __future__ import annotations

import os
from pathlib import Path
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def line_plot_svg(series: dict[str, list[float]], title: str = "", xlabel: str = "", ylabel: str = "",
                  width: int = 480, height: int = 300) -> str:
    margin_l, margin_r, margin_t, margin_b = 60, 110, 30, 40
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b
    values = [v for ys in series.values() for v in ys]
    lo, hi = (min(values), max(values)) if values else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    n = max((len(ys) for ys in series.values()), default=1)

    def px(i):
        return margin_l + (pw * i / (n - 1) if n > 1 else pw / 2)

    def py(v):
        return margin_t + ph * (1 - (v - lo) / (hi - lo))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{margin_l - 4}" y="{margin_t + 4}" text-anchor="end">{hi:.4g}</text>',
           f'<text x="{margin_l - 4}" y="{margin_t + ph}" text-anchor="end">{lo:.4g}</text>',
           f'<text x="{margin_l}" y="{height - 22}">0</text>',
           f'<text x="{margin_l + pw}" y="{height - 22}" text-anchor="end">{n - 1}</text>',
           f'<text x="{margin_l + pw / 2:.1f}" y="{height - 6}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="14" y="{margin_t + ph / 2:.1f}" text-anchor="middle" '
           f'transform="rotate(-90 14 {margin_t + ph / 2:.1f})">{escape(ylabel)}</text>']
    for k, (name, ys) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in enumerate(ys))
        if pts:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = margin_t + 14 * k + 8
        out.append(f'<line x1="{width - margin_r + 8}" y1="{ly}" x2="{width - margin_r + 24}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{width - margin_r + 28}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_plot(path: str | os.PathLike, series: dict[str, list[float]], **kw) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(line_plot_svg(series, **kw))
    return path
