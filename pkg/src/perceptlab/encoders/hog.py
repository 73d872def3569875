"""Dalal-Triggs histogram of oriented gradients for a single frame.

Parameters are the canonical ones: 9 unsigned orientation bins, 8x8-pixel
cells, 2x2-cell blocks with a one-cell stride, L2-Hys block normalisation.
Bin ``k`` is centred on ``20 * k`` degrees; each pixel splits its gradient
magnitude linearly between the two nearest bin centres.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError

N_BINS = 9
CELL = 8
BLOCK = 2
HYS_CLIP = 0.2
EPS = 1e-5
LUMA = np.array([0.299, 0.587, 0.114])


def luminance(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 2:
        return frame
    return frame @ LUMA


def gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centred differences; the one-pixel border gets zero gradient."""
    gx = np.zeros_like(gray)
    gy = np.zeros_like(gray)
    gx[:, 1:-1] = gray[:, 2:] - gray[:, :-2]
    gy[1:-1, :] = gray[2:, :] - gray[:-2, :]
    return gx, gy


def cell_histograms(gray: np.ndarray) -> np.ndarray:
    """``(cells_y, cells_x, N_BINS)`` orientation histograms; trailing pixels are dropped."""
    gx, gy = gradients(gray)
    mag = np.hypot(gx, gy)
    ang = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    pos = ang / (180.0 / N_BINS)
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo %= N_BINS
    hi = (lo + 1) % N_BINS
    cy, cx = gray.shape[0] // CELL, gray.shape[1] // CELL
    h, w = cy * CELL, cx * CELL
    cell_id = (np.arange(h)[:, None] // CELL) * cx + (np.arange(w)[None, :] // CELL)
    hist = np.zeros((cy * cx, N_BINS))
    m = mag[:h, :w]
    f = frac[:h, :w]
    np.add.at(hist, (cell_id.ravel(), lo[:h, :w].ravel()), (m * (1 - f)).ravel())
    np.add.at(hist, (cell_id.ravel(), hi[:h, :w].ravel()), (m * f).ravel())
    return hist.reshape(cy, cx, N_BINS)


def l2_hys(v: np.ndarray) -> np.ndarray:
    v = v / np.sqrt(np.sum(v * v) + EPS ** 2)
    v = np.minimum(v, HYS_CLIP)
    return v / np.sqrt(np.sum(v * v) + EPS ** 2)


def hog_descriptor(frame: np.ndarray) -> np.ndarray:
    gray = luminance(frame)
    if gray.shape[0] < CELL * BLOCK or gray.shape[1] < CELL * BLOCK:
        raise InputError(f"frame {gray.shape[1]}x{gray.shape[0]} is smaller than one {CELL * BLOCK}px block")
    hist = cell_histograms(gray)
    cy, cx, _ = hist.shape
    blocks = [l2_hys(hist[i:i + BLOCK, j:j + BLOCK].ravel())
              for i in range(cy - BLOCK + 1) for j in range(cx - BLOCK + 1)]
    return np.concatenate(blocks)


def hog_length(height: int, width: int) -> int:
    by = height // CELL - BLOCK + 1
    bx = width // CELL - BLOCK + 1
    return by * bx * BLOCK * BLOCK * N_BINS
