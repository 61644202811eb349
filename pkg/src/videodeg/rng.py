"""Deterministic random streams.

Every stream is a Philox4x64-10 counter-based generator keyed by
``(seed, stream_id)``. Only the raw 64-bit words are taken from the cipher;
all distributions below are computed here from those words so their output
does not depend on numpy's (unversioned) distribution code.

Frozen conventions
------------------
* uniform:  ``(word >> 11) * 2**-53``, a double on [0, 1).
* normal:   Box-Muller on consecutive word pairs ``(u1, u2)``:
  ``r = sqrt(-2 log(1 - u1))``, outputs ``r cos(2 pi u2), r sin(2 pi u2)``
  interleaved; an odd request discards the final sine.
* poisson:  inversion (one uniform per element) for ``lam < 30``; Hormann's
  PTRS transformed rejection for ``lam >= 30``, processed in rounds where
  each still-pending element consumes two uniforms, in element order.
* categorical: one uniform, inverse CDF over the cumulative probabilities.
* permutation: Fisher-Yates, ``i = n-1 .. 1``, ``j = floor(u * (i + 1))``.
* sub-streams: ``spawn(*labels)`` keeps the seed and sets
  ``stream_id = blake2b-64(stream_id, labels)``; labels are ints or strings.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Sequence

import numpy as np
from scipy.special import gammaln

_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / (1 << 53)
POISSON_INVERSION_LIMIT = 30.0
POISSON_MAX_LAM = 1e7


def derive_stream_id(parent: int, *labels: int | str) -> int:
    h = hashlib.blake2b(digest_size=8, person=b"videodeg-strm")
    h.update(struct.pack("<Q", parent & _MASK64))
    for label in labels:
        if isinstance(label, (bool, np.bool_)):
            raise TypeError("stream labels must be int or str")
        if isinstance(label, (int, np.integer)):
            h.update(b"i" + struct.pack("<Q", int(label) & _MASK64))
        elif isinstance(label, str):
            data = label.encode("utf-8")
            h.update(b"s" + struct.pack("<Q", len(data)) + data)
        else:
            raise TypeError(f"stream labels must be int or str, got {type(label).__name__}")
    return int.from_bytes(h.digest(), "little")


class SeededRng:
    """Reproducible random source identified by ``(seed, stream_id)``.

    Two instances with equal identity produce identical outputs for an
    identical sequence of calls.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not 0 <= seed <= _MASK64 or not 0 <= stream_id <= _MASK64:
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        # built on first draw; streams used only to spawn children never need one
        self._bits = None

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, *labels: int | str) -> "SeededRng":
        """Independent sub-stream; does not advance this stream."""
        return SeededRng(self.seed, derive_stream_id(self.stream_id, *labels))

    def raw(self, n: int) -> np.ndarray:
        if n == 0:
            return np.empty(0, dtype=np.uint64)
        if self._bits is None:
            self._bits = np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        return np.asarray(self._bits.random_raw(n), dtype=np.uint64)

    def random(self, size=None) -> np.ndarray | float:
        n = int(np.prod(size)) if size is not None else 1
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV53
        return float(u[0]) if size is None else u.reshape(size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        u = self.random(size)
        return low + (high - low) * u

    def integers(self, low: int, high: int) -> int:
        """Single integer uniform on ``[low, high)``."""
        if high <= low:
            raise ValueError("empty integer range")
        return low + min(int(self.random() * (high - low)), high - low - 1)

    def normal(self, size=None) -> np.ndarray | float:
        n = int(np.prod(size)) if size is not None else 1
        m = (n + 1) // 2
        u = self.random(2 * m).reshape(m, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.empty((m, 2))
        z[:, 0] = r * np.cos(theta)
        z[:, 1] = r * np.sin(theta)
        z = z.reshape(-1)[:n]
        return float(z[0]) if size is None else z.reshape(size)

    def categorical(self, probs: Sequence[float]) -> int:
        p = np.asarray(probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0) or p.sum() <= 0:
            raise ValueError("probabilities must be a nonempty nonnegative vector")
        cdf = np.cumsum(p) / p.sum()
        u = self.random()
        idx = int(np.searchsorted(cdf, u, side="right"))
        # guard against cdf[-1] rounding below u
        idx = min(idx, p.size - 1)
        while p[idx] == 0:
            idx -= 1
        return idx

    def permutation(self, n: int) -> list[int]:
        out = list(range(n))
        if n < 2:
            return out
        u = self.random(n - 1)
        for t, i in enumerate(range(n - 1, 0, -1)):
            j = min(int(u[t] * (i + 1)), i)
            out[i], out[j] = out[j], out[i]
        return out

    def poisson(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        if np.any(~np.isfinite(lam)) or np.any(lam < 0) or np.any(lam > POISSON_MAX_LAM):
            raise ValueError(f"poisson rate must lie in [0, {POISSON_MAX_LAM:g}]")
        flat = lam.reshape(-1)
        out = np.zeros(flat.shape, dtype=np.float64)
        small = np.flatnonzero(flat < POISSON_INVERSION_LIMIT)
        large = np.flatnonzero(flat >= POISSON_INVERSION_LIMIT)
        if small.size:
            out[small] = self._poisson_inversion(flat[small])
        if large.size:
            out[large] = self._poisson_ptrs(flat[large])
        return out.reshape(lam.shape)

    def _poisson_inversion(self, lam: np.ndarray) -> np.ndarray:
        u = self.random(lam.size)
        k = np.zeros(lam.size)
        p = np.exp(-lam)
        cdf = p.copy()
        active = np.flatnonzero(u > cdf)
        step = 0
        # P(k > 200 | lam < 30) is far below double resolution
        while active.size and step < 200:
            step += 1
            p[active] *= lam[active] / step
            cdf[active] += p[active]
            k[active] = step
            active = active[u[active] > cdf[active]]
        return k

    def _poisson_ptrs(self, lam: np.ndarray) -> np.ndarray:
        slam = np.sqrt(lam)
        loglam = np.log(lam)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        invalpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2.0)

        out = np.empty(lam.size)
        pending = np.arange(lam.size)
        while pending.size:
            uv = self.random(2 * pending.size).reshape(pending.size, 2)
            U = uv[:, 0] - 0.5
            V = uv[:, 1]
            us = 0.5 - np.abs(U)
            ap, bp, lp = a[pending], b[pending], lam[pending]
            k = np.floor((2.0 * ap / us + bp) * U + lp + 0.43)

            accept = (us >= 0.07) & (V <= vr[pending])
            reject = (k < 0) | ((us < 0.013) & (V > us))
            test = ~accept & ~reject
            with np.errstate(divide="ignore", invalid="ignore"):
                lhs = np.log(V) + np.log(invalpha[pending]) - np.log(ap / (us * us) + bp)
                rhs = -lp + k * loglam[pending] - gammaln(k + 1.0)
            accept |= test & (lhs <= rhs)

            out[pending[accept]] = k[accept]
            pending = pending[~accept]
        return out
