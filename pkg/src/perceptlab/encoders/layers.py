"""Spatiotemporal convolution and max pooling on ``(N, C, T, H, W)`` volumes.

Convolution is "same" cross-correlation with stride 1 and zero padding of
``k // 2`` on every axis. It is computed as one matrix product per kernel
offset, which keeps memory at a single shifted copy of the input.
Pooling is non-overlapping and ceil-mode: ragged edges form partial windows.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import ConfigurationError


def _batched(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 4:
        return x[None], True
    if x.ndim == 5:
        return x, False
    raise ConfigurationError(f"expected a C x T x H x W or N x C x T x H x W volume, got shape {x.shape}")


def _check_conv_shapes(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> None:
    if kernel.ndim != 5:
        raise ConfigurationError(f"kernel must be C' x C x kt x kh x kw, got shape {kernel.shape}")
    if kernel.shape[1] != x.shape[1]:
        raise ConfigurationError(f"kernel expects {kernel.shape[1]} input channels, volume has {x.shape[1]}")
    if any(k % 2 == 0 for k in kernel.shape[2:]):
        raise ConfigurationError("kernel extents must be odd for same-size output")
    if bias.shape != (kernel.shape[0],):
        raise ConfigurationError(f"bias must have shape ({kernel.shape[0]},), got {bias.shape}")


def _padded_channels_first(x: np.ndarray, pads) -> np.ndarray:
    # (N, C, T, H, W) -> (C, N, T+2pt, H+2ph, W+2pw)
    xc = np.moveaxis(x, 1, 0)
    return np.pad(xc, [(0, 0), (0, 0)] + [(p, p) for p in pads])


def conv3d_forward(volume, kernel, bias, activation: bool = True, return_cache: bool = False):
    """Same-size stride-1 cross-correlation, optionally followed by a rectifier.

    Accepts ``C x T x H x W`` or batched ``N x C x T x H x W`` volumes.
    """
    volume = np.asarray(volume)
    kernel = np.asarray(kernel)
    bias = np.asarray(bias)
    x, squeeze = _batched(volume)
    _check_conv_shapes(x, kernel, bias)
    n, c, t, h, w = x.shape
    co = kernel.shape[0]
    kt, kh, kw = kernel.shape[2:]
    dtype = np.result_type(x.dtype, kernel.dtype)
    xp = _padded_channels_first(x.astype(dtype, copy=False), (kt // 2, kh // 2, kw // 2))
    # per-offset kernel slices must be contiguous or matmul bypasses BLAS
    taps = np.ascontiguousarray(kernel.transpose(2, 3, 4, 0, 1), dtype=dtype)
    out = np.zeros((co, n * t * h * w), dtype=dtype)
    for a, b, d in itertools.product(range(kt), range(kh), range(kw)):
        patch = xp[:, :, a:a + t, b:b + h, d:d + w].reshape(c, -1)
        out += taps[a, b, d] @ patch
    out += bias.astype(dtype)[:, None]
    out = np.moveaxis(out.reshape(co, n, t, h, w), 0, 1)
    pre = out
    if activation:
        out = np.maximum(out, 0)
    out = np.ascontiguousarray(out)
    if squeeze:
        out = out[0]
    if return_cache:
        return out, (x, kernel, pre if activation else None)
    return out


def conv3d_backward(grad_out: np.ndarray, cache):
    """Gradients ``(d_volume, d_kernel, d_bias)`` for batched ``conv3d_forward``."""
    x, kernel, pre = cache
    g = grad_out if grad_out.ndim == 5 else grad_out[None]
    if pre is not None:
        g = g * (pre > 0)
    n, c, t, h, w = x.shape
    co = kernel.shape[0]
    kt, kh, kw = kernel.shape[2:]
    pads = (kt // 2, kh // 2, kw // 2)
    xp = _padded_channels_first(x, pads)
    g2 = np.moveaxis(g, 1, 0).reshape(co, -1)
    taps_t = np.ascontiguousarray(kernel.transpose(2, 3, 4, 1, 0))
    d_kernel = np.empty_like(kernel)
    d_xp = np.zeros_like(xp)
    for a, b, d in itertools.product(range(kt), range(kh), range(kw)):
        patch = xp[:, :, a:a + t, b:b + h, d:d + w].reshape(c, -1)
        d_kernel[:, :, a, b, d] = g2 @ patch.T
        d_xp[:, :, a:a + t, b:b + h, d:d + w] += (taps_t[a, b, d] @ g2).reshape(c, n, t, h, w)
    d_bias = g2.sum(axis=1)
    pt, ph, pw = pads
    d_x = d_xp[:, :, pt:pt + t, ph:ph + h, pw:pw + w]
    return np.ascontiguousarray(np.moveaxis(d_x, 0, 1)), d_kernel, d_bias


def pool_output_shape(shape, window) -> tuple[int, int, int]:
    return tuple(math.ceil(s / k) for s, k in zip(shape, window))


def maxpool3d_forward(volume, window, return_cache: bool = False):
    """Non-overlapping ceil-mode max pooling over the last three axes."""
    volume = np.asarray(volume)
    x, squeeze = _batched(volume)
    window = tuple(int(k) for k in window)
    if len(window) != 3 or min(window) < 1:
        raise ConfigurationError(f"pool window must be three positive ints, got {window}")
    n, c, t, h, w = x.shape
    ot, oh, ow = pool_output_shape((t, h, w), window)
    kt, kh, kw = window
    pad = [(0, 0), (0, 0), (0, ot * kt - t), (0, oh * kh - h), (0, ow * kw - w)]
    xp = np.pad(x, pad, constant_values=-np.inf) if any(p[1] for p in pad) else x
    blocks = xp.reshape(n, c, ot, kt, oh, kh, ow, kw).transpose(0, 1, 2, 4, 6, 3, 5, 7)
    blocks = blocks.reshape(n, c, ot, oh, ow, kt * kh * kw)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    out = np.ascontiguousarray(out)
    if squeeze:
        out = out[0]
    if return_cache:
        return out, (x.shape, window, arg)
    return out


def maxpool3d_backward(grad_out: np.ndarray, cache) -> np.ndarray:
    """Route each pooled gradient to the (first) maximal element of its window."""
    shape, window, arg = cache
    g = grad_out if grad_out.ndim == 5 else grad_out[None]
    n, c, t, h, w = shape
    kt, kh, kw = window
    ot, oh, ow = arg.shape[2:]
    blocks = np.zeros((n, c, ot, oh, ow, kt * kh * kw), dtype=g.dtype)
    np.put_along_axis(blocks, arg[..., None], g[..., None], axis=-1)
    blocks = blocks.reshape(n, c, ot, oh, ow, kt, kh, kw).transpose(0, 1, 2, 5, 3, 6, 4, 7)
    full = blocks.reshape(n, c, ot * kt, oh * kh, ow * kw)
    return np.ascontiguousarray(full[:, :, :t, :h, :w])
