"""Exact fractional Gaussian noise by circulant embedding (Davies-Harte).

The covariance row ``r(0), ..., r(M/2), r(M/2-1), ..., r(1)`` of a symmetric
circulant of size ``M >= 2(n - 1)`` is diagonalised by the FFT.  For
``hurst > 1/2`` its eigenvalues are nonnegative; tiny negative round-off
values are clipped and the clipped mass is kept for inspection.

One complex FFT yields two independent exact samples (real and imaginary
parts), which :meth:`FgnSampler.draw_pair` exposes.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft

__all__ = ["FgnSpec", "EmbeddingError", "FgnSampler", "fgn_autocovariance", "sample_fgn"]

_NEG_TOL = 1e-10
_MAX_DOUBLINGS = 6


class EmbeddingError(RuntimeError):
    """The circulant embedding is not nonnegative definite."""


@dataclass(frozen=True)
class FgnSpec:
    hurst: float
    n: int
    delta: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("fGn length n must be >= 2")
        if not self.delta > 0:
            raise ValueError("grid step delta must be positive")
        if not 0.5 < self.hurst < 1.0:
            raise ValueError("hurst must lie in (1/2, 1)")

    @property
    def increment_scale(self) -> float:
        """Standard deviation of an fBm increment over one grid step."""
        return self.delta**self.hurst


def fgn_autocovariance(k, hurst: float):
    """Autocovariance of unit-variance fGn at integer lag(s) ``k``."""
    k = np.abs(np.asarray(k, dtype=np.float64))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** h2 + np.abs(k - 1.0) ** h2 - 2.0 * k**h2)


@functools.lru_cache(maxsize=32)
def _embedding(n: int, hurst: float, size: int) -> tuple[np.ndarray, float, float]:
    half = size // 2
    c = fgn_autocovariance(np.arange(half + 1), hurst)
    row = np.concatenate([c, c[-2:0:-1]])
    lam = scipy.fft.rfft(row).real
    lam_min = float(lam.min())
    total = float(np.abs(lam).sum())
    clipped = float(-lam[lam < 0].sum())
    lam = np.clip(lam, 0.0, None)
    full = np.concatenate([lam, lam[-2:0:-1]])
    amp = np.sqrt(full / size)
    amp.setflags(write=False)
    return amp, lam_min, clipped / total


class FgnSampler:
    """Reusable sampler for fGn of fixed length and index.

    Attributes
    ----------
    size : int
        Circulant size actually used (a power of two).
    min_eigenvalue : float
        Smallest embedding eigenvalue before clipping.
    clipped_fraction : float
        Clipped negative mass relative to the total eigenvalue mass.
    """

    def __init__(self, spec: FgnSpec):
        self.spec = spec
        size = 1 << int(np.ceil(np.log2(max(2 * (spec.n - 1), 2))))
        for _ in range(_MAX_DOUBLINGS + 1):
            amp, lam_min, clipped = _embedding(spec.n, spec.hurst, size)
            if lam_min >= -_NEG_TOL * max(1.0, size):
                break
            size *= 2
        else:
            raise EmbeddingError(
                f"circulant embedding has negative eigenvalue {lam_min:.3g} at size {size}"
            )
        self.size = size
        self._amp = amp
        self.min_eigenvalue = lam_min
        self.clipped_fraction = clipped

    def draw_pair(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Two independent unit-variance fGn vectors from one FFT."""
        m = self.size
        w = rng.standard_normal(2 * m).view(np.complex128)
        y = scipy.fft.fft(self._amp * w)
        n = self.spec.n
        return y.real[:n].copy(), y.imag[:n].copy()

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self.draw_pair(rng)[0]

    def draw_many(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``count`` independent rows; consumes ``ceil(count/2)`` FFTs."""
        out = np.empty((count, self.spec.n))
        for i in range(0, count, 2):
            a, b = self.draw_pair(rng)
            out[i] = a
            if i + 1 < count:
                out[i + 1] = b
        return out


def sample_fgn(spec: FgnSpec, rng: np.random.Generator) -> np.ndarray:
    """One exact stationary fGn vector with unit variance."""
    return FgnSampler(spec).draw(rng)
