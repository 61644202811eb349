"""Empirical reports on degraded clips: downscaling vs noise, and order diversity."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .core import Clip, ShapeError, psnr, residual
from .pipeline import apply_plan, clip_stream, fixed_order, sample_plan
from .resample import downscale


@dataclass
class DownscaleReport:
    mode: str
    rows: list[tuple[float, float]]  # (scale, psnr_db), scales descending

    CSV_COLUMNS = ("scale", "mode", "psnr_db")

    def psnr_at(self, scale: float) -> float:
        for s, p in self.rows:
            if math.isclose(s, scale):
                return p
        raise KeyError(scale)

    def to_dict(self) -> dict:
        return {
            "schema": "videodeg.downscale_report",
            "version": 1,
            "mode": self.mode,
            "rows": [{"scale": s, "psnr_db": _finite_or_str(p)} for s, p in self.rows],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for s, p in self.rows:
            w.writerow([repr(s), self.mode, repr(p)])
        return buf.getvalue()


def _finite_or_str(x: float):
    return x if math.isfinite(x) else str(x)


def downscale_noise_report(clean, noisy, scales=(1.0, 0.5, 0.25), mode: str = "area") -> DownscaleReport:
    """PSNR between downscaled noisy and downscaled clean data, per scale factor."""
    c = clean.frames if isinstance(clean, Clip) else np.asarray(clean, dtype=np.float64)
    n = noisy.frames if isinstance(noisy, Clip) else np.asarray(noisy, dtype=np.float64)
    if c.shape != n.shape:
        raise ShapeError(f"clips are not aligned: {c.shape} vs {n.shape}")
    scales = [float(s) for s in scales]
    if len(set(scales)) != len(scales) or any(s <= 0 or s > 1 for s in scales):
        raise ValueError("scales must be distinct factors in (0, 1]")
    rows = []
    for s in sorted(scales, reverse=True):
        if s == 1.0:
            rows.append((s, psnr(n, c)))
        else:
            rows.append((s, psnr(downscale(n, s, mode), downscale(c, s, mode))))
    return DownscaleReport(mode, rows)


def dispersion(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    q1, q3 = np.percentile(v, [25, 75])
    return {
        "mean": float(v.mean()),
        "std": float(v.std()),
        "iqr": float(q3 - q1),
        "min": float(v.min()),
        "max": float(v.max()),
    }


@dataclass
class VarianceReport:
    shuffled_std: list[float]
    fixed_std: list[float]
    shuffled_orders: list[list[str]] = field(default_factory=list)
    CSV_COLUMNS = ("pipeline", "shuffled_std", "fixed_std", "shuffled_order")

    @property
    def shuffled(self) -> dict:
        return dispersion(self.shuffled_std)

    @property
    def fixed(self) -> dict:
        return dispersion(self.fixed_std)

    def to_dict(self) -> dict:
        return {
            "schema": "videodeg.variance_report",
            "version": 1,
            "n_pipelines": len(self.shuffled_std),
            "shuffled": self.shuffled,
            "fixed": self.fixed,
            "shuffled_std": self.shuffled_std,
            "fixed_std": self.fixed_std,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for i, (a, b) in enumerate(zip(self.shuffled_std, self.fixed_std)):
            order = ">".join(self.shuffled_orders[i]) if self.shuffled_orders else ""
            w.writerow([i, repr(a), repr(b), order])
        return buf.getvalue()


def _residual_std(degraded: Clip, clean: Clip) -> float:
    r = residual(degraded, clean)
    return float(np.sqrt(np.mean((r - r.mean()) ** 2)))


def shuffle_variance_report(clean: Clip, config: PipelineConfig, n_pipelines: int, seed: int | None = None) -> VarianceReport:
    """Residual std per sampled plan, once in shuffled and once in canonical order.

    Both runs of plan ``i`` share parameters and noise streams; only the
    stage order differs.
    """
    if n_pipelines < 2:
        raise ValueError("need at least two pipelines")
    seed = config.seed if seed is None else seed
    shuffled_cfg = config.replace(shuffle=True)
    shuffled, fixed, orders = [], [], []
    for i in range(n_pipelines):
        rng = clip_stream(seed, i)
        plan = sample_plan(shuffled_cfg, rng, len(clean))
        shuffled.append(_residual_std(apply_plan(clean, plan, rng), clean))
        fixed.append(_residual_std(apply_plan(clean, fixed_order(plan), rng), clean))
        orders.append(plan.order)
    return VarianceReport(shuffled, fixed, orders)
