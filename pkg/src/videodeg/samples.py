"""Natural test imagery from scikit-image's bundled data (no downloads)."""

from __future__ import annotations

import numpy as np

from .core import Clip

NATURAL_IMAGES = ("astronaut", "coffee", "chelsea", "rocket", "immunohistochemistry")


def natural_image(name: str = "astronaut", size: int | None = 128, top: int = 0, left: int = 0) -> np.ndarray:
    """Unit-range RGB image, optionally cropped to ``size x size`` at (top, left)."""
    from skimage import data

    if name not in NATURAL_IMAGES:
        raise ValueError(f"unknown sample image {name!r}")
    img = getattr(data, name)()[..., :3].astype(np.float64) / 255.0
    if size is None:
        return img
    h, w = img.shape[:2]
    if top + size > h or left + size > w:
        raise ValueError(f"crop {size} at ({top}, {left}) exceeds {name} ({h}x{w})")
    return np.ascontiguousarray(img[top : top + size, left : left + size])


def pan_clip(name: str = "astronaut", size: int = 96, n_frames: int = 5, step: int = 3, top: int = 40, left: int = 150) -> Clip:
    """Frames cut from a sliding window over one image, mimicking a slow camera pan."""
    img = natural_image(name, size=None)
    frames = [img[top + i : top + i + size, left + step * i : left + step * i + size] for i in range(n_frames)]
    return Clip([np.ascontiguousarray(f) for f in frames], fps=24.0)
