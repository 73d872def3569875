"""Frame-averaged baseline features.

baseline-1 averages the output of a fixed 2D conv-pool stack over frames,
baseline-2 averages per-frame HOG descriptors. Neither sees temporal order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..clipcore import VideoClip, preprocess
from ..errors import InputError
from .hog import hog_descriptor
from .layers import conv3d_forward, maxpool3d_forward


def frame_avg_encode(clip: VideoClip, per_frame_encoder: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    vecs = [np.asarray(per_frame_encoder(f), dtype=np.float64) for f in clip.frames]
    if len({v.shape for v in vecs}) != 1:
        raise InputError("per-frame encoder returned vectors of different lengths")
    return np.mean(vecs, axis=0)


@dataclass
class FrameConvStack:
    """Randomly initialised, frozen conv-pool x4 image encoder (seeded)."""

    channels: tuple[int, ...] = (16, 32, 64, 64)
    seed: int = 0
    kernels: list = field(init=False, repr=False)

    def __post_init__(self):
        rng = np.random.default_rng([self.seed, 2024])
        self.kernels = []
        cin = 3
        for cout in self.channels:
            fan_in, fan_out = cin * 9, cout * 9
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            k = rng.uniform(-bound, bound, size=(cout, cin, 1, 3, 3)).astype(np.float32)
            self.kernels.append((k, np.zeros(cout, np.float32)))
            cin = cout

    def batch(self, frames: np.ndarray) -> np.ndarray:
        """``(N, H, W, 3)`` frames -> ``(N, D)`` features."""
        x = np.ascontiguousarray(np.asarray(frames, np.float32).transpose(0, 3, 1, 2))[:, :, None]
        for k, b in self.kernels:
            x = conv3d_forward(x, k, b, activation=True)
            x = maxpool3d_forward(x, (1, 2, 2))
        return x.reshape(x.shape[0], -1)

    def __call__(self, frame: np.ndarray) -> np.ndarray:
        return self.batch(np.asarray(frame)[None])[0]


@dataclass
class FrameAverageEncoder:
    """Callable clip encoder: resize, downsample to ``n_frames``, average a per-frame feature."""

    per_frame: Callable[[np.ndarray], np.ndarray]
    height: int = 56
    width: int = 56
    n_frames: int = 16
    name: str = "baseline"

    def __call__(self, clip: VideoClip) -> np.ndarray:
        clip = preprocess(clip, self.n_frames, self.height, self.width)
        if isinstance(self.per_frame, FrameConvStack):
            # identical to per-frame averaging, just batched
            return self.per_frame.batch(clip.frames).astype(np.float64).mean(axis=0)
        return frame_avg_encode(clip, self.per_frame)


def baseline1(height: int = 56, width: int = 56, seed: int = 0) -> FrameAverageEncoder:
    return FrameAverageEncoder(FrameConvStack(seed=seed), height, width, name="baseline1")


def baseline2(height: int = 56, width: int = 56) -> FrameAverageEncoder:
    return FrameAverageEncoder(hog_descriptor, height, width, name="baseline2")
