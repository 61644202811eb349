"""Frames, clips, residual statistics and PSNR.

A frame is a float64 array of shape ``(H, W, 3)`` with nominal range [0, 1].
A clip stacks frames into ``(T, H, W, 3)``. Noise parameters quoted on the
0-255 scale are divided by 255 where they are sampled, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import SeededRng

__all__ = [
    "Clip",
    "ResidualStats",
    "SeededRng",
    "ShapeError",
    "as_frame",
    "clamp_unit",
    "psnr",
    "residual",
    "stats",
]

HIST_BINS = 201


class ShapeError(ValueError):
    """Inputs that must be aligned are not."""


def as_frame(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"frame must have shape (H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("frame contains non-finite samples")
    return arr


@dataclass(frozen=True)
class Clip:
    """Ordered frames of equal size; ``fps`` is metadata only."""

    frames: np.ndarray
    fps: float | None = None

    def __post_init__(self):
        arr = self.frames
        if isinstance(arr, (list, tuple)):
            if not arr:
                raise ShapeError("clip needs at least one frame")
            shapes = {np.shape(f) for f in arr}
            if len(shapes) != 1:
                raise ShapeError(f"clip frames differ in shape: {sorted(shapes)}")
            arr = np.stack([as_frame(f) for f in arr])
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[0] < 1 or arr.shape[3] != 3:
            raise ShapeError(f"clip must have shape (T, H, W, 3), got {arr.shape}")
        if self.fps is not None and not self.fps > 0:
            raise ValueError("fps must be positive")
        object.__setattr__(self, "frames", arr)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i) -> np.ndarray:
        return self.frames[i]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def with_frames(self, frames) -> "Clip":
        return Clip(frames, self.fps)


def _array(x) -> np.ndarray:
    return x.frames if isinstance(x, Clip) else np.asarray(x, dtype=np.float64)


def residual(degraded, clean) -> np.ndarray:
    """Signed ``degraded - clean``; not clamped."""
    d, c = _array(degraded), _array(clean)
    if d.shape != c.shape:
        raise ShapeError(f"shape mismatch: {d.shape} vs {c.shape}")
    return d - c


@dataclass(frozen=True)
class ResidualStats:
    mean: float
    variance: float
    std: float
    sample_count: int
    histogram: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "std": self.std,
            "sample_count": self.sample_count,
            "histogram": [int(c) for c in self.histogram],
        }


def histogram_edges(bins: int = HIST_BINS) -> np.ndarray:
    return np.linspace(-1.0, 1.0, bins + 1)


def stats(res, bins: int = HIST_BINS) -> ResidualStats:
    """Two-pass mean/variance plus a fixed-bin histogram over [-1, 1].

    Samples outside [-1, 1] are counted in the end bins so the histogram
    always sums to ``sample_count``.
    """
    x = _array(res).reshape(-1)
    if x.size == 0:
        raise ValueError("stats of empty input")
    if not np.all(np.isfinite(x)):
        raise ValueError("residual contains non-finite samples")
    mean = math.fsum(x) / x.size
    dev = x - mean
    var = math.fsum(dev * dev) / x.size
    counts, _ = np.histogram(np.clip(x, -1.0, 1.0), bins=histogram_edges(bins))
    return ResidualStats(mean, var, math.sqrt(var), int(x.size), counts.astype(np.int64))


def merge_stats(parts: Sequence[ResidualStats]) -> ResidualStats:
    """Pool per-clip statistics exactly (population variance)."""
    if not parts:
        raise ValueError("nothing to merge")
    n = sum(p.sample_count for p in parts)
    mean = math.fsum(p.mean * p.sample_count for p in parts) / n
    ss = math.fsum(p.sample_count * (p.variance + (p.mean - mean) ** 2) for p in parts)
    var = ss / n
    hist = np.sum([p.histogram for p in parts], axis=0)
    return ResidualStats(mean, var, math.sqrt(var), n, hist)


def mse(a, b) -> float:
    r = residual(a, b)
    return float(np.mean(r * r))


def psnr(a, b) -> float:
    """RGB PSNR in dB for unit-range data; ``inf`` when identical."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def clamp_unit(x):
    if isinstance(x, Clip):
        return x.with_frames(np.clip(x.frames, 0.0, 1.0))
    return np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
