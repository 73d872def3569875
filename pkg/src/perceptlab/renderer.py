"""Flat-shaded software rasteriser for planar world states.

Every pixel centre is mapped back into world coordinates and tested for
containment in each primitive, drawn in a fixed order (background, clutter,
zone, objects, particles, manipulator). No anti-aliasing, so output is
bit-exact across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .clipcore import VideoClip, rotate_frame, sample_indices
from .errors import ConfigurationError, InputError
from .simworld.arm import ArmConfig, fk
from .simworld.world import Obj, SimParams, WorldState

BASE_PALETTE = (
    ("background", (0.92, 0.92, 0.88)),
    ("background_alt", (0.82, 0.84, 0.86)),
    ("zone", (0.55, 0.85, 0.55)),
    ("object", (0.85, 0.25, 0.2)),
    ("target", (0.5, 0.3, 0.15)),
    ("block", (0.9, 0.6, 0.1)),
    ("particle", (0.45, 0.35, 0.6)),
    ("arm", (0.2, 0.3, 0.7)),
    ("joint", (0.1, 0.1, 0.2)),
    ("hand", (0.95, 0.75, 0.6)),
    ("sleeve", (0.3, 0.5, 0.4)),
)
TASK_OBJECT_KEYS = ("zone", "object", "target", "block", "particle")


class SetupTag(str, Enum):
    V1 = "V1"
    V2 = "V2"
    Obj1 = "Obj1"
    Obj2 = "Obj2"
    BG = "BG"
    M = "M"


@dataclass(frozen=True)
class Decoy:
    shape: str
    position: tuple[float, float]
    size: tuple[float, ...]
    color: tuple[float, float, float]


@dataclass(frozen=True)
class SceneStyle:
    height: int = 56
    width: int = 56
    view_center: tuple[float, float] = (0.0, 0.38)
    view_half: float = 0.42
    rotation: int = 0
    zoom: float = 1.0
    palette: tuple = BASE_PALETTE
    swap_shapes: bool = False
    clutter: tuple[Decoy, ...] = ()
    skin: str = "arm"
    morph_variant: bool = False
    background: str = "plain"
    particle_radius: float = SimParams.particle_radius

    def __post_init__(self):
        if self.height < 16 or self.width < 16:
            raise ConfigurationError("render resolution must be at least 16x16")
        if self.skin not in ("arm", "hand"):
            raise ConfigurationError(f"unknown skin {self.skin!r}")
        if self.background not in ("plain", "checker"):
            raise ConfigurationError(f"unknown background {self.background!r}")
        if self.zoom <= 0:
            raise ConfigurationError("zoom must be positive")
        for _, rgb in self.palette:
            if len(rgb) != 3 or min(rgb) < 0 or max(rgb) > 1:
                raise ConfigurationError(f"palette colour {rgb} outside [0, 1]")

    def color(self, key: str) -> np.ndarray:
        return np.array(dict(self.palette)[key], dtype=np.float32)

    def with_colors(self, **colors) -> "SceneStyle":
        pal = dict(self.palette)
        pal.update({k: tuple(float(c) for c in v) for k, v in colors.items()})
        return replace(self, palette=tuple(pal.items()))

    @property
    def meters_per_pixel(self) -> float:
        return 2.0 * self.view_half / (self.zoom * min(self.height, self.width))

    def to_config(self, prefix: str = "style") -> dict[str, str]:
        out = {
            f"{prefix}.height": str(self.height), f"{prefix}.width": str(self.width),
            f"{prefix}.view_center": _fmt(self.view_center), f"{prefix}.view_half": repr(self.view_half),
            f"{prefix}.rotation": str(self.rotation), f"{prefix}.zoom": repr(self.zoom),
            f"{prefix}.swap_shapes": str(self.swap_shapes).lower(), f"{prefix}.skin": self.skin,
            f"{prefix}.morph_variant": str(self.morph_variant).lower(), f"{prefix}.background": self.background,
        }
        for key, rgb in self.palette:
            out[f"{prefix}.palette.{key}"] = _fmt(rgb)
        for i, d in enumerate(self.clutter):
            out[f"{prefix}.clutter.{i}"] = f"{d.shape};{_fmt(d.position)};{_fmt(d.size)};{_fmt(d.color)}"
        return out

    @classmethod
    def from_config(cls, cfg: dict[str, str], prefix: str = "style") -> "SceneStyle":
        p = prefix + "."
        items = {k[len(p):]: v for k, v in cfg.items() if k.startswith(p)}
        base = cls()
        kw = {}
        conv = {
            "height": int, "width": int, "view_center": _floats, "view_half": float, "rotation": int,
            "zoom": float, "swap_shapes": _bool, "skin": str, "morph_variant": _bool, "background": str,
        }
        for k, fn in conv.items():
            if k in items:
                kw[k] = fn(items[k])
        pal = dict(base.palette)
        clutter = []
        for k, v in items.items():
            if k.startswith("palette."):
                pal[k[len("palette."):]] = _floats(v)
            elif k.startswith("clutter."):
                shape, pos, size, color = v.split(";")
                clutter.append((int(k.split(".")[1]), Decoy(shape.strip(), _floats(pos), _floats(size), _floats(color))))
            elif k not in conv:
                raise ConfigurationError(f"unknown style key {p}{k}")
        kw["palette"] = tuple(pal.items())
        kw["clutter"] = tuple(d for _, d in sorted(clutter))
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad style config: {exc}") from None


def _fmt(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in str(text).split(","))
    except ValueError:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ConfigurationError(f"expected a boolean, got {text!r}")


@lru_cache(maxsize=32)
def _pixel_grid(h: int, w: int, cx: float, cy: float, mpp: float) -> tuple[np.ndarray, np.ndarray]:
    cols = (np.arange(w) + 0.5 - w / 2.0) * mpp + cx
    rows = cy - (np.arange(h) + 0.5 - h / 2.0) * mpp
    return np.meshgrid(cols, rows)


def world_to_pixel(style: SceneStyle, point) -> tuple[float, float]:
    """Continuous (row, col) of a world point in the final (rotated) frame."""
    h, w = _canvas_size(style)
    mpp = style.meters_per_pixel
    col = (point[0] - style.view_center[0]) / mpp + w / 2.0
    row = (style.view_center[1] - point[1]) / mpp + h / 2.0
    for _ in range(style.rotation % 4):
        # clockwise quarter turn: (r, c) -> (c, H - r), canvas dims swap
        row, col = col, h - row
        h, w = w, h
    return row, col


def _canvas_size(style: SceneStyle) -> tuple[int, int]:
    if style.rotation % 2:
        return style.width, style.height
    return style.height, style.width


def _disc(X, Y, c, r):
    return (X - c[0]) ** 2 + (Y - c[1]) ** 2 <= r * r


def _box(X, Y, c, h):
    return (np.abs(X - c[0]) <= h[0]) & (np.abs(Y - c[1]) <= h[1])


def _capsule(X, Y, a, b, half_width):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ab = b - a
    denom = max(float(ab @ ab), 1e-12)
    t = np.clip(((X - a[0]) * ab[0] + (Y - a[1]) * ab[1]) / denom, 0.0, 1.0)
    dx = X - (a[0] + t * ab[0])
    dy = Y - (a[1] + t * ab[1])
    return dx * dx + dy * dy <= half_width * half_width


def _shape_mask(X, Y, shape: str, pos, size, swap: bool):
    if swap:
        shape = "box" if shape == "disc" else "disc"
        size = (size[0], size[0]) if shape == "box" else (max(size),)
    if shape == "disc":
        return _disc(X, Y, pos, size[0])
    return _box(X, Y, pos, size)


def render_state(state: WorldState, arm: ArmConfig, style: SceneStyle,
                 zone: tuple[tuple[float, float], float] | None = None) -> np.ndarray:
    """Rasterise one state into an ``(H, W, 3)`` frame.

    ``zone`` is ``(center, radius)`` of the task's target zone, drawn under the objects.
    """
    h, w = _canvas_size(style)
    mpp = style.meters_per_pixel
    X, Y = _pixel_grid(h, w, float(style.view_center[0]), float(style.view_center[1]), mpp)
    frame = np.empty((h, w, 3), dtype=np.float32)
    frame[:] = style.color("background")
    if style.background == "checker":
        cell = 0.1
        checker = ((np.floor(X / cell) + np.floor(Y / cell)) % 2).astype(bool)
        frame[checker] = style.color("background_alt")
    for d in style.clutter:
        frame[_shape_mask(X, Y, d.shape, d.position, d.size, False)] = np.array(d.color, np.float32)
    if zone is not None:
        frame[_disc(X, Y, zone[0], zone[1])] = style.color("zone")
    for o in state.objects:
        frame[_shape_mask(X, Y, o.shape, o.position, o.size, style.swap_shapes)] = style.color(
            o.tag if o.tag in dict(style.palette) else "object")
    if len(state.particles):
        pr = max(style.particle_radius, 0.75 * mpp)
        pmask = np.zeros((h, w), bool)
        for p in state.particles:
            pmask |= _disc(X, Y, p, pr)
        frame[pmask] = style.color("particle")
    _draw_manipulator(frame, X, Y, state, arm, style)
    if style.rotation % 4:
        frame = rotate_frame(frame, style.rotation)
    return frame


def _draw_manipulator(frame, X, Y, state: WorldState, arm: ArmConfig, style: SceneStyle) -> None:
    pts = fk(arm, state.joints)
    if style.skin == "arm":
        half = arm.link_width / 2.0
        color = style.color("arm")
        for a, b in zip(pts[:-1], pts[1:]):
            frame[_capsule(X, Y, a, b, half)] = color
        joint = style.color("joint")
        for p in pts[:-1]:
            frame[_disc(X, Y, p, half * 0.8)] = joint
        frame[_disc(X, Y, pts[-1], arm.ee_radius)] = joint
        return
    # human hand: a sleeve up to the wrist and a hand segment to the fingertips
    ee = pts[-1]
    direction = ee - pts[-2]
    direction = direction / max(np.linalg.norm(direction), 1e-12)
    wrist = ee - direction * 0.07
    elbow = pts[max(0, len(pts) - 3)]
    frame[_capsule(X, Y, elbow, wrist, 0.04)] = style.color("sleeve")
    frame[_capsule(X, Y, wrist, ee + direction * 0.02, 0.03)] = style.color("hand")


def render_trajectory(traj, arm: ArmConfig, style: SceneStyle, n_frames: int = 16,
                      zone=None, fps: float = 30.0) -> VideoClip:
    """Render ``n_frames`` states picked by ``floor(i * T / n)``."""
    if n_frames < 1:
        raise InputError("n_frames must be positive")
    idx = sample_indices(len(traj), n_frames)
    cache = {}
    frames = []
    for i in idx:
        if i not in cache:
            cache[i] = render_state(traj[i], arm, style, zone)
        frames.append(cache[i])
    return VideoClip(np.stack(frames), fps)


def _distinct_color(rng: np.random.Generator, avoid: list[np.ndarray], min_dist: float = 0.35) -> tuple:
    for _ in range(200):
        c = rng.uniform(0.05, 0.95, size=3)
        if all(np.linalg.norm(c - a) >= min_dist for a in avoid):
            return tuple(float(v) for v in c)
    return tuple(float(v) for v in c)


def apply_setup(base: SceneStyle, setup, seed: int = 0, v2_turns: int = 1, v2_zoom: float = 1.2,
                n_decoys: int = 4) -> SceneStyle:
    """Trial-side scene style for one experimental setup; ``base`` is the demonstration style."""
    setup = SetupTag(setup)
    rng = np.random.default_rng([seed, list(SetupTag).index(setup)])
    if setup is SetupTag.V1:
        return base
    if setup is SetupTag.V2:
        return replace(base, rotation=(base.rotation + v2_turns) % 4, zoom=base.zoom * v2_zoom)
    if setup in (SetupTag.Obj1, SetupTag.Obj2):
        used = [np.array(c) for _, c in base.palette]
        recolor = {}
        for key in TASK_OBJECT_KEYS:
            recolor[key] = _distinct_color(rng, used)
            used.append(np.array(recolor[key]))
        style = base.with_colors(**recolor)
        if setup is SetupTag.Obj2:
            style = replace(style, swap_shapes=not base.swap_shapes)
        return style
    if setup is SetupTag.BG:
        used = [np.array(c) for _, c in base.palette]
        decoys = []
        for _ in range(n_decoys):
            cx, cy = base.view_center
            pos = (float(cx + rng.uniform(-0.9, 0.9) * base.view_half),
                   float(cy + rng.uniform(-0.9, 0.9) * base.view_half))
            shape = "disc" if rng.random() < 0.5 else "box"
            size = (float(rng.uniform(0.03, 0.07)),) if shape == "disc" else tuple(
                float(v) for v in rng.uniform(0.02, 0.06, size=2))
            color = _distinct_color(rng, used, 0.25)
            decoys.append(Decoy(shape, pos, size, color))
        return replace(base, clutter=base.clutter + tuple(decoys))
    # M: the learner is always the robot arm; the harness swaps the demonstrator's body
    return replace(base, skin="arm", morph_variant=True)


def random_style(rng: np.random.Generator, base: SceneStyle | None = None) -> SceneStyle:
    """Randomised viewpoint, colours, clutter and skin for pretraining data."""
    base = base or SceneStyle()
    style = replace(base, rotation=int(rng.integers(4)), zoom=float(rng.uniform(0.9, 1.3)),
                    skin="hand" if rng.random() < 0.3 else "arm",
                    background="checker" if rng.random() < 0.2 else "plain")
    seed = int(rng.integers(2 ** 31))
    if rng.random() < 0.5:
        style = apply_setup(style, SetupTag.Obj1, seed)
    if rng.random() < 0.3:
        style = replace(style, swap_shapes=True)
    if rng.random() < 0.4:
        style = apply_setup(style, SetupTag.BG, seed, n_decoys=int(rng.integers(1, 5)))
    if rng.random() < 0.3:
        colors = {k: _distinct_color(rng, [style.color("background")]) for k in ("arm", "joint")}
        style = style.with_colors(**colors)
    return style
