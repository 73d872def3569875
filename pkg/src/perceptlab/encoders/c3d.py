"""C3D-shaped activity encoder: a stack of 3x3x3 convolutions and max pools.

The flattened output of the final pooling layer is the activity feature.
A linear classifier head on top of it is only used for pretraining.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..clipcore import VideoClip, preprocess
from ..errors import ConfigurationError, InputError
from .layers import (
    conv3d_backward,
    conv3d_forward,
    maxpool3d_backward,
    maxpool3d_forward,
    pool_output_shape,
)

KERNEL = (3, 3, 3)
INPUT_MEAN = 0.5     # pixel intensities are centred before the first convolution


@dataclass(frozen=True)
class Conv:
    out_channels: int
    kernel: tuple[int, int, int] = KERNEL
    relu: bool = True


@dataclass(frozen=True)
class Pool:
    window: tuple[int, int, int]


@dataclass(frozen=True)
class EncoderConfig:
    input_frames: int = 16
    input_h: int = 56
    input_w: int = 56
    layers: tuple = ()
    num_classes: int = 5
    in_channels: int = 3
    name: str = "custom"

    def __post_init__(self):
        if not self.layers:
            raise ConfigurationError("encoder needs at least one layer")
        for layer in self.layers:
            if isinstance(layer, Conv):
                if layer.kernel != KERNEL:
                    raise ConfigurationError(f"conv kernels must be 3x3x3, got {layer.kernel}")
                if layer.out_channels < 1:
                    raise ConfigurationError("conv needs at least one output channel")
            elif isinstance(layer, Pool):
                if len(layer.window) != 3 or min(layer.window) < 1:
                    raise ConfigurationError(f"bad pool window {layer.window}")
            else:
                raise ConfigurationError(f"unknown layer spec {layer!r}")

    @property
    def input_shape(self) -> tuple[int, int, int, int]:
        return (self.in_channels, self.input_frames, self.input_h, self.input_w)

    def output_shape(self) -> tuple[int, int, int, int]:
        c, t, h, w = self.input_shape
        for layer in self.layers:
            if isinstance(layer, Conv):
                c = layer.out_channels
            else:
                t, h, w = pool_output_shape((t, h, w), layer.window)
        return (c, t, h, w)

    @property
    def feature_dim(self) -> int:
        return int(np.prod(self.output_shape()))

    def conv_layers(self) -> list[tuple[str, Conv, int]]:
        """``(name, spec, in_channels)`` for every conv layer, in order."""
        out, c = [], self.in_channels
        for layer in self.layers:
            if isinstance(layer, Conv):
                out.append((f"conv{len(out) + 1}", layer, c))
                c = layer.out_channels
        return out

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes = {}
        for name, layer, cin in self.conv_layers():
            shapes[f"{name}.weight"] = (layer.out_channels, cin, *layer.kernel)
            shapes[f"{name}.bias"] = (layer.out_channels,)
        shapes["head.weight"] = (self.num_classes, self.feature_dim)
        shapes["head.bias"] = (self.num_classes,)
        return shapes


def c3d_config(num_classes: int = 101) -> EncoderConfig:
    """Full-size C3D layout: 8 convs, 5 pools, 16x112x112 input, 8192 features."""
    p1, p = Pool((1, 2, 2)), Pool((2, 2, 2))
    layers = (
        Conv(64), p1,
        Conv(128), p,
        Conv(256), Conv(256), p,
        Conv(512), Conv(512), p,
        Conv(512), Conv(512), p,
    )
    return EncoderConfig(16, 112, 112, layers, num_classes, name="c3d")


def desk_config(num_classes: int = 5) -> EncoderConfig:
    """Reduced layout for laptop runs: 16x56x56 input, 256 features."""
    p = Pool((2, 2, 2))
    layers = (
        Conv(8), Pool((1, 2, 2)),
        Conv(16), p,
        Conv(32), p,
        Conv(64), p,
        Conv(64), p,
    )
    return EncoderConfig(16, 56, 56, layers, num_classes, name="desk")


CONFIGS = {"c3d": c3d_config, "desk": desk_config}


class WeightBundle(dict):
    """Named float32 tensors for one :class:`EncoderConfig`, in layer order."""

    def validate(self, config: EncoderConfig) -> "WeightBundle":
        expected = config.tensor_shapes()
        if list(self.keys()) != list(expected):
            raise ConfigurationError(
                f"weight names {list(self.keys())} do not match config {list(expected)}")
        for name, shape in expected.items():
            if self[name].shape != shape:
                raise ConfigurationError(f"{name}: shape {self[name].shape}, config wants {shape}")
            if not np.all(np.isfinite(self[name])):
                raise ConfigurationError(f"{name} holds non-finite values")
        return self

    def copy(self) -> "WeightBundle":
        return WeightBundle((k, v.copy()) for k, v in self.items())

    def astype(self, dtype) -> "WeightBundle":
        return WeightBundle((k, v.astype(dtype)) for k, v in self.items())

    def equals(self, other: "WeightBundle") -> bool:
        return list(self) == list(other) and all(np.array_equal(self[k], other[k]) for k in self)


def init_weights(config: EncoderConfig, seed: int = 0) -> WeightBundle:
    """He-normal conv kernels (suited to ReLU stacks), Glorot-uniform head, zero biases, seeded."""
    rng = np.random.default_rng(seed)
    weights = WeightBundle()
    for name, shape in config.tensor_shapes().items():
        if name.endswith(".bias"):
            weights[name] = np.zeros(shape, np.float32)
        elif len(shape) == 5:
            fan_in = shape[1] * int(np.prod(shape[2:]))
            weights[name] = (rng.normal(size=shape) * np.sqrt(2.0 / fan_in)).astype(np.float32)
        else:
            fan_out, fan_in = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights[name] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
    return weights


def clip_to_volume(clip: VideoClip, config: EncoderConfig) -> np.ndarray:
    """``(T, H, W, 3)`` frames -> centred ``(3, T, H, W)`` input volume, checking preprocessing."""
    if (len(clip), clip.height, clip.width) != (config.input_frames, config.input_h, config.input_w):
        raise InputError(
            f"clip is {len(clip)}x{clip.height}x{clip.width}, encoder expects "
            f"{config.input_frames}x{config.input_h}x{config.input_w}; preprocess it first")
    return np.ascontiguousarray(clip.frames.transpose(3, 0, 1, 2)) - np.float32(INPUT_MEAN)


def features_forward(x: np.ndarray, config: EncoderConfig, weights, keep_cache: bool = False):
    """Run the conv/pool stack on a batch ``(N, C, T, H, W)``; returns ``(N, D)`` features."""
    caches = []
    conv_names = iter(name for name, _, _ in config.conv_layers())
    for layer in config.layers:
        if isinstance(layer, Conv):
            name = next(conv_names)
            res = conv3d_forward(x, weights[f"{name}.weight"], weights[f"{name}.bias"],
                                 activation=layer.relu, return_cache=keep_cache)
            if keep_cache:
                x, cache = res
                caches.append(("conv", name, cache))
            else:
                x = res
        else:
            res = maxpool3d_forward(x, layer.window, return_cache=keep_cache)
            if keep_cache:
                x, cache = res
                caches.append(("pool", None, cache))
            else:
                x = res
    feats = x.reshape(x.shape[0], -1)
    return (feats, (caches, x.shape)) if keep_cache else feats


def features_backward(grad_feats: np.ndarray, cache) -> dict[str, np.ndarray]:
    caches, out_shape = cache
    g = grad_feats.reshape(out_shape)
    grads = {}
    for kind, name, c in reversed(caches):
        if kind == "conv":
            g, dk, db = conv3d_backward(g, c)
            grads[f"{name}.weight"] = dk
            grads[f"{name}.bias"] = db
        else:
            g = maxpool3d_backward(g, c)
    return grads


def logits_from_features(feats: np.ndarray, weights) -> np.ndarray:
    return feats @ weights["head.weight"].T + weights["head.bias"]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def encode(clip: VideoClip, config: EncoderConfig, weights) -> np.ndarray:
    """Activity feature of a preprocessed clip: the flattened last pooling output."""
    x = clip_to_volume(clip, config)[None]
    return features_forward(x, config, weights)[0]


def classify(clip: VideoClip, config: EncoderConfig, weights) -> np.ndarray:
    feats = encode(clip, config, weights).astype(np.float64)
    return softmax(logits_from_features(feats, {k: np.asarray(v, np.float64) for k, v in weights.items()
                                                 if k.startswith("head.")}))


@dataclass
class C3DEncoder:
    """Callable wrapper: preprocesses a raw clip and returns its activity feature."""

    config: EncoderConfig
    weights: WeightBundle = field(repr=False)
    name: str = "proposed"

    def __post_init__(self):
        self.weights.validate(self.config)

    def preprocess(self, clip: VideoClip) -> VideoClip:
        return preprocess(clip, self.config.input_frames, self.config.input_h, self.config.input_w)

    def __call__(self, clip: VideoClip) -> np.ndarray:
        return encode(self.preprocess(clip), self.config, self.weights)

    def classify(self, clip: VideoClip) -> np.ndarray:
        return classify(self.preprocess(clip), self.config, self.weights)

    @property
    def dim(self) -> int:
        return self.config.feature_dim
