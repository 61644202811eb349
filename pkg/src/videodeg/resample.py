"""Separable image resizing: bilinear, area and bicubic.

Each mode is a dense ``(out, in)`` weight matrix per axis, applied to rows
and columns in turn. Sampling positions follow the half-pixel convention
``src = (dst + 0.5) * in / out - 0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MODES = ("bilinear", "area", "bicubic")


@dataclass(frozen=True)
class ResizeSpec:
    scale: float
    mode: str
    cubic_a: float = -0.5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown resize mode {self.mode!r}")
        if not self.scale > 0:
            raise ValueError("resize scale must be positive")

    def to_dict(self) -> dict:
        return {"scale": self.scale, "mode": self.mode, "cubic_a": self.cubic_a}


def _cubic(t: np.ndarray, a: float) -> np.ndarray:
    t = np.abs(t)
    t2, t3 = t * t, t * t * t
    near = (a + 2) * t3 - (a + 3) * t2 + 1
    far = a * t3 - 5 * a * t2 + 8 * a * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


@lru_cache(maxsize=256)
def _weights(n_in: int, n_out: int, mode: str, a: float) -> np.ndarray:
    w = np.zeros((n_out, n_in))
    ratio = n_in / n_out
    if mode == "area":
        for i in range(n_out):
            lo, hi = i * ratio, (i + 1) * ratio
            for j in range(int(math.floor(lo)), min(int(math.ceil(hi)), n_in)):
                w[i, j] = min(hi, j + 1) - max(lo, j)
        return w / w.sum(axis=1, keepdims=True)

    src = (np.arange(n_out) + 0.5) * ratio - 0.5
    if mode == "bilinear":
        src = np.clip(src, 0.0, n_in - 1)
        j0 = np.floor(src).astype(int)
        j1 = np.minimum(j0 + 1, n_in - 1)
        f = src - j0
        rows = np.arange(n_out)
        np.add.at(w, (rows, j0), 1.0 - f)
        np.add.at(w, (rows, j1), f)
    elif mode == "bicubic":
        base = np.floor(src).astype(int)
        f = src - base
        rows = np.arange(n_out)
        for k in range(-1, 3):
            idx = np.clip(base + k, 0, n_in - 1)
            np.add.at(w, (rows, idx), _cubic(f - k, a))
    else:
        raise ValueError(f"unknown resize mode {mode!r}")
    return w


def resize(frame: np.ndarray, height: int, width: int, mode: str = "bilinear", a: float = -0.5) -> np.ndarray:
    """Resize an ``(H, W, C)`` array. Bicubic output is clamped to [0, 1]."""
    if height < 1 or width < 1:
        raise ValueError(f"resize target must be at least 1x1, got {height}x{width}")
    if mode not in MODES:
        raise ValueError(f"unknown resize mode {mode!r}")
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape[:2]
    if (h, w) == (height, width):
        return frame.copy()
    wy = _weights(h, height, mode, a)
    wx = _weights(w, width, mode, a)
    out = (wy @ frame.reshape(h, -1)).reshape(height, w, -1)
    out = np.matmul(wx, out)
    if mode == "bicubic":
        out = np.clip(out, 0.0, 1.0)
    return out


def intermediate_size(height: int, width: int, scale: float) -> tuple[int, int]:
    # the sampled scale multiplies the dimensions for the first resize
    return int(round(height * scale)), int(round(width * scale))


def resizing_blur(frame: np.ndarray, spec: ResizeSpec) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape[:2]
    mh, mw = intermediate_size(h, w, spec.scale)
    if mh < 1 or mw < 1:
        raise ValueError(f"scale {spec.scale} gives an empty intermediate frame")
    mid = resize(frame, mh, mw, spec.mode, spec.cubic_a)
    return resize(mid, h, w, spec.mode, spec.cubic_a)


def downscale(x: np.ndarray, factor: float, mode: str = "area") -> np.ndarray:
    """Resize every frame of ``(..., H, W, C)`` data by ``factor`` (< 1 shrinks)."""
    x = np.asarray(x, dtype=np.float64)
    h, w = x.shape[-3:-1]
    th, tw = max(1, int(round(h * factor))), max(1, int(round(w * factor)))
    if x.ndim == 3:
        return resize(x, th, tw, mode)
    return np.stack([resize(f, th, tw, mode) for f in x])
