"""Camera pipeline noise: invert the ISP to a Bayer raw, add sensor noise, re-render.

Reverse: sRGB decode, inverse color matrix, inverse white balance, mosaic.
Forward: bilinear demosaic, white balance, color matrix, sRGB encode, clamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate

from .rng import SeededRng

PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")

# Rows sum to one so white stays white.
DEFAULT_CCM = (
    (1.20, -0.15, -0.05),
    (-0.10, 1.25, -0.15),
    (-0.02, -0.18, 1.20),
)
IDENTITY_CCM = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

_K_GREEN = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]], dtype=np.float64) / 4.0
_K_RED_BLUE = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float64) / 4.0


@dataclass(frozen=True)
class IspNoiseSpec:
    bayer_pattern: str = "RGGB"
    shot_gain: float = 0.0
    read_sigma: float = 0.0
    wb_gains: tuple[float, float] = (1.0, 1.0)
    ccm: tuple[tuple[float, ...], ...] = field(default=IDENTITY_CCM)

    def __post_init__(self):
        if self.bayer_pattern not in PATTERNS:
            raise ValueError(f"unknown bayer pattern {self.bayer_pattern!r}")
        if self.shot_gain < 0 or self.read_sigma < 0:
            raise ValueError("sensor noise parameters must be nonnegative")
        if len(self.wb_gains) != 2 or min(self.wb_gains) <= 0:
            raise ValueError("white-balance gains must be two positive numbers")
        ccm = np.asarray(self.ccm, dtype=np.float64)
        if ccm.shape != (3, 3):
            raise ValueError("color matrix must be 3x3")
        if not np.allclose(ccm.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("color matrix rows must sum to 1")
        object.__setattr__(self, "wb_gains", tuple(float(g) for g in self.wb_gains))
        object.__setattr__(self, "ccm", tuple(tuple(float(v) for v in row) for row in ccm))

    def to_dict(self) -> dict:
        return {
            "bayer_pattern": self.bayer_pattern,
            "shot_gain": self.shot_gain,
            "read_sigma": self.read_sigma,
            "wb_gains": list(self.wb_gains),
            "ccm": [list(r) for r in self.ccm],
        }


def srgb_to_linear(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.04045, x / 12.92, ((np.maximum(x, 0.04045) + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.maximum(x, 0.0031308) ** (1 / 2.4) - 0.055)


def bayer_masks(pattern: str, height: int, width: int) -> np.ndarray:
    """``(H, W, 3)`` 0/1 masks marking which color each site samples."""
    idx = {"R": 0, "G": 1, "B": 2}
    masks = np.zeros((height, width, 3))
    for k, color in enumerate(pattern):
        dy, dx = divmod(k, 2)
        masks[dy::2, dx::2, idx[color]] = 1.0
    return masks


def mosaic(rgb: np.ndarray, pattern: str) -> np.ndarray:
    m = bayer_masks(pattern, *rgb.shape[:2])
    return (rgb * m).sum(axis=2)


def demosaic_bilinear(raw: np.ndarray, pattern: str) -> np.ndarray:
    m = bayer_masks(pattern, *raw.shape)
    out = np.empty(raw.shape + (3,))
    for c, k in enumerate((_K_RED_BLUE, _K_GREEN, _K_RED_BLUE)):
        num = correlate(raw * m[..., c], k, mode="mirror")
        den = correlate(m[..., c], k, mode="mirror")
        out[..., c] = num / den
    return out


def _white_balance(spec: IspNoiseSpec) -> np.ndarray:
    return np.array([spec.wb_gains[0], 1.0, spec.wb_gains[1]])


def isp_reverse(frame: np.ndarray, spec: IspNoiseSpec) -> np.ndarray:
    """sRGB frame -> single-channel linear Bayer raw (negative values clipped)."""
    ccm = np.asarray(spec.ccm)
    if abs(np.linalg.det(ccm)) < 1e-12:
        raise ValueError("color matrix is singular")
    lin = srgb_to_linear(frame)
    cam = lin @ np.linalg.inv(ccm).T
    cam = cam / _white_balance(spec)
    return np.maximum(mosaic(cam, spec.bayer_pattern), 0.0)


def isp_add_raw_noise(raw: np.ndarray, spec: IspNoiseSpec, rng: SeededRng) -> np.ndarray:
    """Poisson-Gaussian sensor noise: ``Poisson(raw / g) * g + N(0, read_sigma^2)``."""
    raw = np.asarray(raw, dtype=np.float64)
    if np.any(raw < 0):
        raise ValueError("raw samples must be nonnegative")
    out = raw
    if spec.shot_gain > 0:
        out = rng.poisson(raw / spec.shot_gain) * spec.shot_gain
    if spec.read_sigma > 0:
        out = out + spec.read_sigma * rng.normal(raw.shape)
    return out


def isp_forward(raw: np.ndarray, spec: IspNoiseSpec) -> np.ndarray:
    cam = demosaic_bilinear(np.asarray(raw, dtype=np.float64), spec.bayer_pattern)
    lin = (cam * _white_balance(spec)) @ np.asarray(spec.ccm).T
    return np.clip(linear_to_srgb(lin), 0.0, 1.0)


def add_isp_noise(frame: np.ndarray, spec: IspNoiseSpec, rng: SeededRng) -> np.ndarray:
    raw = isp_reverse(frame, spec)
    return isp_forward(isp_add_raw_noise(raw, spec, rng), spec)
