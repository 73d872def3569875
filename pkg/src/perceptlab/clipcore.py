"""Video clips, temporal downsampling and frame-level image transforms.

A frame is an ``(H, W, 3)`` float array with values in ``[0, 1]`` (RGB order).
A :class:`VideoClip` stacks frames into a ``(T, H, W, 3)`` array.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, InputError

DEFAULT_CLIP_FRAMES = 16


def as_frame(pixels) -> np.ndarray:
    """Validate and return a frame as a read-only float32 ``(H, W, 3)`` array."""
    arr = np.asarray(pixels, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InputError(f"frame must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError("frame must be at least 1x1")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise InputError("pixel values must lie in [0, 1]")
    return arr


@dataclass(frozen=True, eq=False)
class VideoClip:
    frames: np.ndarray
    fps: float = 30.0

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise InputError(f"clip frames must have shape (T, H, W, 3), got {frames.shape}")
        if frames.shape[0] < 1:
            raise InputError("clip needs at least one frame")
        if frames.min() < 0.0 or frames.max() > 1.0:
            raise InputError("pixel values must lie in [0, 1]")
        frames = frames.copy() if frames is self.frames else frames
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_frames(cls, frames, fps: float = 30.0) -> "VideoClip":
        frames = [as_frame(f) for f in frames]
        if not frames:
            raise InputError("clip needs at least one frame")
        if len({f.shape for f in frames}) != 1:
            raise InputError("all frames in a clip must share one resolution")
        return cls(np.stack(frames), fps)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.frames[i]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def map_frames(self, fn) -> "VideoClip":
        return VideoClip.from_frames([fn(f) for f in self.frames], self.fps)

    def equals(self, other: "VideoClip") -> bool:
        return self.fps == other.fps and np.array_equal(self.frames, other.frames)


def sample_indices(total: int, n: int) -> np.ndarray:
    """Source indices ``floor(i * total / n)`` for ``i = 0..n-1``."""
    if total < 1 or n < 1:
        raise InputError("need total >= 1 and n >= 1")
    return (np.arange(n, dtype=np.int64) * total) // n


def downsample_uniform(clip: VideoClip, n: int = DEFAULT_CLIP_FRAMES) -> VideoClip:
    """Pick exactly ``n`` frames; short clips repeat frames."""
    idx = sample_indices(len(clip), n)
    return VideoClip(clip.frames[idx], clip.fps * n / len(clip))


def rotate_frame(frame: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Rotate clockwise by ``90 * quarter_turns`` degrees."""
    # np.rot90 turns counter-clockwise for positive k
    return np.ascontiguousarray(np.rot90(frame, k=-(quarter_turns % 4), axes=(0, 1)))


def swap_rb(frame: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(frame[..., ::-1])


def _bilinear_axis(n_in: int, n_out: int):
    # half-pixel centres: output pixel i samples source coordinate (i + 0.5) * n_in / n_out - 0.5
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(frame: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    if out_h < 1 or out_w < 1:
        raise InputError("output size must be at least 1x1")
    h, w = frame.shape[:2]
    if (h, w) == (out_h, out_w):
        return np.array(frame, dtype=np.float32)
    f = np.asarray(frame, dtype=np.float64)
    r0, r1, fr = _bilinear_axis(h, out_h)
    c0, c1, fc = _bilinear_axis(w, out_w)
    fr = fr[:, None, None]
    fc = fc[None, :, None]
    top = f[r0][:, c0] * (1 - fc) + f[r0][:, c1] * fc
    bot = f[r1][:, c0] * (1 - fc) + f[r1][:, c1] * fc
    out = top * (1 - fr) + bot * fr
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def preprocess(clip: VideoClip, n_frames: int, height: int, width: int) -> VideoClip:
    """Downsample to ``n_frames`` and resize every frame to ``height x width``."""
    clip = downsample_uniform(clip, n_frames)
    if (clip.height, clip.width) != (height, width):
        clip = clip.map_frames(lambda f: resize_bilinear(f, height, width))
    return clip


# --- on-disk format -------------------------------------------------------

def _to_u8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(frame, np.float64) * 255.0), 0, 255).astype(np.uint8)


def save_clip(clip: VideoClip, directory: str | os.PathLike) -> Path:
    """Write ``frame_00000.png ...`` plus ``manifest.txt`` into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for stale in d.glob("frame_*.png"):
        stale.unlink()
    for i, frame in enumerate(clip.frames):
        Image.fromarray(_to_u8(frame), mode="RGB").save(d / f"frame_{i:05d}.png", optimize=False)
    manifest = (
        f"count={len(clip)}\n"
        f"fps={float(clip.fps)!r}\n"
        f"width={clip.width}\n"
        f"height={clip.height}\n"
    )
    (d / "manifest.txt").write_text(manifest)
    return d


def _read_manifest(path: Path) -> dict[str, str]:
    if not path.is_file():
        raise FormatError(f"missing clip manifest: {path}")
    fields = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"bad manifest line {line!r} in {path}")
        fields[key.strip()] = value.strip()
    missing = {"count", "fps", "width", "height"} - fields.keys()
    if missing:
        raise FormatError(f"manifest {path} lacks {sorted(missing)}")
    return fields


def load_clip(directory: str | os.PathLike) -> VideoClip:
    d = Path(directory)
    meta = _read_manifest(d / "manifest.txt")
    try:
        count, width, height = int(meta["count"]), int(meta["width"]), int(meta["height"])
        fps = float(meta["fps"])
    except ValueError as exc:
        raise FormatError(f"unparseable manifest in {d}: {exc}") from None
    if count < 1 or not math.isfinite(fps):
        raise FormatError(f"invalid manifest values in {d}")
    frames = []
    for i in range(count):
        path = d / f"frame_{i:05d}.png"
        if not path.is_file():
            raise FormatError(f"manifest declares {count} frames but {path.name} is missing")
        try:
            with Image.open(path) as img:
                arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
        except (UnidentifiedImageError, OSError) as exc:
            raise FormatError(f"{path.name} is not a readable PNG: {exc}") from None
        if arr.shape[:2] != (height, width):
            raise FormatError(f"{path.name} is {arr.shape[1]}x{arr.shape[0]}, manifest says {width}x{height}")
        frames.append(arr)
    if (d / f"frame_{count:05d}.png").exists():
        raise FormatError(f"{d} holds more frames than the manifest count {count}")
    return VideoClip(np.stack(frames), fps)
