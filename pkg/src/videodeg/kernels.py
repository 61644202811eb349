"""Blur kernel families and 2-D filtering.

Radial profiles, with ``q = d^T S^-1 d`` and
``S = R(theta) diag(sx^2, sy^2) R(theta)^T``:

* iso / aniso             ``exp(-q / 2)``
* generalized_iso/aniso   ``exp(-0.5 * q**beta)``
* plateau_iso/aniso       ``1 / (1 + q**beta)``
* sinc                    ``omega J1(omega r) / (2 pi r)``, center ``omega^2 / (4 pi)``

All taps are normalized to sum to one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import correlate
from scipy.special import j1

from .rng import SeededRng

FAMILIES = (
    "iso",
    "aniso",
    "generalized_iso",
    "generalized_aniso",
    "plateau_iso",
    "plateau_aniso",
    "sinc",
)
FAMILY_PROBS = (0.405, 0.225, 0.108, 0.027, 0.108, 0.027, 0.1)

_ISOTROPIC = {"iso", "generalized_iso", "plateau_iso"}
_SHAPED = {"generalized_iso", "generalized_aniso", "plateau_iso", "plateau_aniso"}


@dataclass(frozen=True)
class KernelSpec:
    family: str
    size: int
    sigma_x: float = 1.0
    sigma_y: float = 1.0
    theta: float = 0.0
    beta: float | None = None
    omega: float | None = None
    window: str = "none"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.size % 2 != 1 or self.size < 1:
            raise ValueError("kernel size must be a positive odd integer")
        if self.family in _SHAPED:
            if self.beta is None or not self.beta > 0:
                raise ValueError(f"{self.family} needs a positive beta")
        elif self.beta is not None:
            raise ValueError(f"{self.family} takes no beta")
        if self.family == "sinc":
            if self.omega is None or not 0 < self.omega <= math.pi:
                raise ValueError("sinc cutoff must lie in (0, pi]")
        elif self.family in _ISOTROPIC:
            if self.sigma_x != self.sigma_y or self.theta != 0.0:
                raise ValueError("isotropic kernels need sigma_x == sigma_y and theta == 0")
        if self.window not in ("none", "raised_cosine"):
            raise ValueError(f"unknown sinc window {self.window!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class KernelRanges:
    """Sampling ranges for blur kernels (all overridable from config)."""

    families: tuple[str, ...] = FAMILIES
    probs: tuple[float, ...] = FAMILY_PROBS
    sizes: tuple[int, ...] = tuple(range(7, 22, 2))
    sigma: tuple[float, float] = (0.2, 3.0)
    beta_generalized: tuple[float, float] = (0.5, 4.0)
    beta_plateau: tuple[float, float] = (1.0, 2.0)
    omega: tuple[float, float] = (math.pi / 3, math.pi)
    sinc_window: str = "none"

    def __post_init__(self):
        if len(self.families) != len(self.probs):
            raise ValueError("kernel families and probabilities differ in length")
        if any(f not in FAMILIES for f in self.families):
            raise ValueError("unknown kernel family in ranges")
        if any(p < 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, abs_tol=1e-9):
            raise ValueError("kernel family probabilities must be nonnegative and sum to 1")
        if any(s % 2 == 0 or s < 1 for s in self.sizes):
            raise ValueError("kernel sizes must be odd")


def sample_kernel_spec(rng: SeededRng, ranges: KernelRanges | None = None) -> KernelSpec:
    r = ranges or KernelRanges()
    family = r.families[rng.categorical(r.probs)]
    size = r.sizes[rng.integers(0, len(r.sizes))]
    if family == "sinc":
        return KernelSpec("sinc", size, omega=rng.uniform(*r.omega), window=r.sinc_window)
    beta = None
    if family.startswith("generalized"):
        beta = rng.uniform(*r.beta_generalized)
    elif family.startswith("plateau"):
        beta = rng.uniform(*r.beta_plateau)
    if family in _ISOTROPIC:
        s = rng.uniform(*r.sigma)
        return KernelSpec(family, size, s, s, 0.0, beta)
    sx = rng.uniform(*r.sigma)
    sy = rng.uniform(*r.sigma)
    theta = rng.uniform(0.0, math.pi)
    return KernelSpec(family, size, sx, sy, theta, beta)


@dataclass(frozen=True)
class Kernel:
    taps: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.taps.shape[0]


def _grid(size: int):
    r = size // 2
    ys, xs = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    return xs, ys


def _mahalanobis(spec: KernelSpec, xs, ys) -> np.ndarray:
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    rot = np.array([[c, -s], [s, c]])
    cov = rot @ np.diag([spec.sigma_x**2, spec.sigma_y**2]) @ rot.T
    inv = np.linalg.inv(cov)
    return inv[0, 0] * xs * xs + (inv[0, 1] + inv[1, 0]) * xs * ys + inv[1, 1] * ys * ys


def make_kernel(spec: KernelSpec) -> Kernel:
    xs, ys = _grid(spec.size)
    if spec.family == "sinc":
        w = spec.omega
        d = np.hypot(xs, ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            taps = w * j1(w * d) / (2.0 * math.pi * d)
        c = spec.size // 2
        taps[c, c] = w * w / (4.0 * math.pi)
        if spec.window == "raised_cosine":
            radius = c + 1
            taps = taps * np.where(d < radius, 0.5 * (1.0 + np.cos(math.pi * d / radius)), 0.0)
    else:
        if not (spec.sigma_x > 0 and spec.sigma_y > 0):
            raise ValueError("kernel sigma must be positive")
        q = _mahalanobis(spec, xs, ys)
        if spec.family in ("iso", "aniso"):
            taps = np.exp(-0.5 * q)
        elif spec.family.startswith("generalized"):
            taps = np.exp(-0.5 * np.power(q, spec.beta))
        else:
            taps = 1.0 / (1.0 + np.power(q, spec.beta))
    total = taps.sum()
    if not np.isfinite(total) or total == 0:
        raise ValueError(f"degenerate kernel for {spec}")
    return Kernel(taps / total)


def delta_kernel(size: int = 7) -> Kernel:
    taps = np.zeros((size, size))
    taps[size // 2, size // 2] = 1.0
    return Kernel(taps)


def convolve(frame: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Per-channel correlation with reflect padding (edge sample not repeated)."""
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape[:2]
    if kernel.size >= h or kernel.size >= w:
        raise ValueError(f"kernel size {kernel.size} must be smaller than frame {h}x{w}")
    out = np.empty_like(frame)
    for ch in range(frame.shape[2]):
        out[..., ch] = correlate(frame[..., ch], kernel.taps, mode="mirror")
    return out
