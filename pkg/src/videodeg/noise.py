"""Pixel-domain noise: additive Gaussian, Poisson shot noise and speckle."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .rng import SeededRng

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class GaussianNoiseSpec:
    sigma_255: float
    grayscale: bool = False

    def __post_init__(self):
        if not self.sigma_255 >= 0:
            raise ValueError("gaussian sigma must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PoissonNoiseSpec:
    alpha: float
    grayscale: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SpeckleNoiseSpec:
    level_255: float
    grayscale: bool = False

    def __post_init__(self):
        if not self.level_255 >= 0:
            raise ValueError("speckle level must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


def _channel_noise(shape, grayscale: bool, rng: SeededRng) -> np.ndarray:
    h, w, c = shape
    if grayscale:
        z = rng.normal((h, w, 1))
        return np.repeat(z, c, axis=2)
    return rng.normal((h, w, c))


def add_gaussian(frame: np.ndarray, spec: GaussianNoiseSpec, rng: SeededRng) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    z = _channel_noise(frame.shape, spec.grayscale, rng)
    return frame + (spec.sigma_255 / 255.0) * z


def add_poisson(frame: np.ndarray, spec: PoissonNoiseSpec, rng: SeededRng) -> np.ndarray:
    """``Poisson(10**alpha * x) / 10**alpha``.

    The grayscale variant draws shot noise on BT.601 luma and adds the same
    residual to all three channels.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if np.any(frame < 0):
        raise ValueError("poisson noise needs nonnegative input; clamp first")
    scale = 10.0**spec.alpha
    if spec.grayscale:
        gray = frame @ LUMA
        z = rng.poisson(gray * scale) / scale - gray
        return frame + z[..., None]
    return rng.poisson(frame * scale) / scale


def add_speckle(frame: np.ndarray, spec: SpeckleNoiseSpec, rng: SeededRng) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    z = _channel_noise(frame.shape, spec.grayscale, rng)
    return frame + frame * ((spec.level_255 / 255.0) * z)
