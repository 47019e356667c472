"""Hermite process paths.

Two simulators are provided.

* :class:`HermiteRankSimulator` -- partial sums of ``He_q(xi_i)`` over a
  fine fGn lattice of index ``H0``.  The normalization is exact for the
  discrete model: ``Var(sum_{i<M} He_q(xi_i)) = q! sum_{|k|<M} (M-|k|) r(k)^q``
  is evaluated in closed form, so ``Var(Z(horizon)) = horizon^(2H)`` holds
  exactly and no pilot batch is needed.
* :class:`DirectHermiteSimulator` -- Galerkin discretization of the kernel
  ``c int_0^t prod_j (s - xi_j)_+^(H0-3/2) ds`` against white noise on a
  graded ``xi`` grid (``q`` in {1, 2}).  Slow, used as an oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._powerkernel import build_basis, graded_edges, lower_for_tail, tail_bound
from .gaussian_noise import FgnSampler, FgnSpec, fgn_autocovariance
from .special_math import HurstParams, hermite_scale_c

__all__ = [
    "ProcessPath",
    "hermite_polynomial",
    "block_variance",
    "HermiteRankSimulator",
    "DirectHermiteSimulator",
    "simulate_hermite_path",
    "simulate_hermite_direct",
    "TruncationWarning",
]


class TruncationWarning(UserWarning):
    """The truncated ``xi`` domain leaves noticeable kernel mass outside."""


@dataclass
class ProcessPath:
    """Uniformly sampled trajectory; ``values[k]`` is the process at ``k * delta``."""

    delta: float
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def n(self) -> int:
        """Number of grid steps (``len(values) - 1``)."""
        return self.values.shape[-1] - 1

    @property
    def times(self) -> np.ndarray:
        return self.delta * np.arange(self.values.shape[-1])

    @property
    def horizon(self) -> float:
        return self.delta * self.n

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=-1)


def hermite_polynomial(q: int, x):
    """Probabilists' Hermite polynomial ``He_q(x)`` (scalar or array)."""
    if q < 0:
        raise ValueError("q must be >= 0")
    out = kernels.hermite_eval(q, np.atleast_1d(x))
    return float(out[0]) if np.ndim(x) == 0 else out


def block_variance(q: int, hurst: float, m_max: int) -> np.ndarray:
    """``V(M) = Var(sum_{i<M} He_q(xi_i))`` for ``M = 0..m_max``.

    ``xi`` is unit fGn of index ``hurst``.  Uses
    ``V(M) = q! (M + 2 (M S1(M) - S2(M)))`` with ``S1 = sum_{1<=k<M} r(k)^q``
    and ``S2 = sum_{1<=k<M} k r(k)^q``.
    """
    k = np.arange(1, max(m_max, 1), dtype=np.float64)
    a = fgn_autocovariance(k, hurst) ** q
    s1 = np.concatenate([[0.0, 0.0], np.cumsum(a)])[: m_max + 1]
    s2 = np.concatenate([[0.0, 0.0], np.cumsum(k * a)])[: m_max + 1]
    M = np.arange(m_max + 1, dtype=np.float64)
    return math.factorial(q) * (M + 2.0 * (M * s1 - s2))


class HermiteRankSimulator:
    """Hermite-rank partial-sum sampler on ``[0, horizon]`` with ``n`` output steps.

    Parameters
    ----------
    p : HurstParams
    n : int
        Number of output steps; the output grid is ``k * horizon / n``.
    horizon : float
    m : int
        Lattice points per output step.  Ignored for ``q = 1``, where fGn is
        sampled at the output step directly (identical in law).
    """

    def __init__(self, p: HurstParams, n: int, horizon: float = 1.0, m: int = 16):
        if not 0.5 < p.H < 1.0:
            raise ValueError("H must lie in (1/2, 1)")
        if n < 2:
            raise ValueError("n must be >= 2")
        if m < 1:
            raise ValueError("m must be >= 1")
        self.p = p
        self.n = int(n)
        self.horizon = float(horizon)
        self.delta = self.horizon / self.n
        self.m = 1 if p.q == 1 else int(m)
        lattice = self.n * self.m
        self.sampler = FgnSampler(FgnSpec(p.H0, lattice))
        self._V = block_variance(p.q, p.H0, lattice)
        self.kappa = self.horizon**p.H / math.sqrt(self._V[lattice])

    def increment_autocov(self) -> np.ndarray:
        """Exact autocovariance of the output increments, lags ``0..n-1``."""
        m, V = self.m, self._V
        d = np.arange(self.n)
        g = 0.5 * (V[(d + 1) * m] + V[np.abs(d - 1) * m] - 2.0 * V[d * m])
        return self.kappa**2 * g

    def variance(self) -> np.ndarray:
        """Exact ``Var(Z(t_k))`` of the discrete model at every output time."""
        return self.kappa**2 * self._V[:: self.m][: self.n + 1]

    def _increments(self, xi: np.ndarray) -> np.ndarray:
        if self.p.q == 1:
            return self.kappa * xi
        return self.kappa * kernels.hermite_block_sums(xi, self.p.q, self.m)

    def increment_pair(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Output increments of two independent paths from one FFT."""
        a, b = self.sampler.draw_pair(rng)
        return self._increments(a), self._increments(b)

    def _path(self, dz: np.ndarray, seed=None) -> ProcessPath:
        values = np.concatenate([[0.0], np.cumsum(dz)])
        meta = {"q": self.p.q, "H": self.p.H, "method": "hermite-rank", "m": self.m, "seed": seed}
        return ProcessPath(self.delta, values, meta)

    def draw_pair(self, rng: np.random.Generator, seed=None) -> tuple[ProcessPath, ProcessPath]:
        a, b = self.increment_pair(rng)
        return self._path(a, seed), self._path(b, seed)

    def draw(self, rng: np.random.Generator, seed=None) -> ProcessPath:
        return self.draw_pair(rng, seed)[0]

    def draw_increments(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``(count, n)`` increments; consumes ``ceil(count / 2)`` FFTs."""
        out = np.empty((count, self.n))
        for i in range(0, count, 2):
            a, b = self.increment_pair(rng)
            out[i] = a
            if i + 1 < count:
                out[i + 1] = b
        return out


def simulate_hermite_path(p: HurstParams, n: int, horizon: float, rng: np.random.Generator,
                          m: int = 16) -> ProcessPath:
    """One Hermite-rank path of ``Z^(q,H)`` on ``[0, horizon]``."""
    if n < 256:
        raise ValueError("n must be >= 256")
    if m < 16:
        raise ValueError("refinement m must be >= 16")
    return HermiteRankSimulator(p, n, horizon, m).draw(rng)


class DirectHermiteSimulator:
    """Kernel-discretization sampler for ``q`` in {1, 2}.

    ``xi`` cells: ``refine`` uniform cells per output step on ``[0, horizon]``,
    then graded cells out to ``-lower``.  With ``Y_s = sum_j phi_s(j) G_j`` the
    path is ``Z(t_k) = c sum_{s < t_k} w_s :Y_s^q:`` where ``:Y^2: = Y^2 - E Y^2``
    is the Wick square, i.e. the discrete double integral with the diagonal
    correction.
    """

    def __init__(self, p: HurstParams, n: int, horizon: float = 1.0, refine: int | None = None,
                 lower: float | None = None, tail_tol: float = 1e-5):
        if p.q not in (1, 2):
            raise ValueError("the direct simulator supports q in {1, 2} only")
        if not 0.5 < p.H < 1.0:
            raise ValueError("H must lie in (1/2, 1)")
        if not 2 <= n <= 512:
            raise ValueError("n must lie in [2, 512]")
        self.p = p
        self.n = int(n)
        self.horizon = float(horizon)
        self.delta = self.horizon / self.n
        self.c = hermite_scale_c(p)
        scale = self.horizon ** (2.0 * p.H)
        if lower is None:
            lower = lower_for_tail(p.q, p.H0, self.c**2, self.horizon, tail_tol * scale)
        self.lower = float(lower)
        self.tail_mass = tail_bound(p.q, p.H0, self.c**2, self.horizon, self.lower) / scale
        if self.tail_mass > 1e-4:
            warnings.warn(f"relative kernel tail mass {self.tail_mass:.2e} beyond -{self.lower:g}",
                          TruncationWarning, stacklevel=2)
        self.refine = refine or max(2, -(-1024 // self.n))
        edges = graded_edges(self.horizon, self.n * self.refine, self.lower)
        self.basis = build_basis(p.H0 - 1.5, edges)
        b = self.basis
        self._phi = np.ascontiguousarray(b.phi)
        self._w = self.c * b.s_weights
        self._diag = np.einsum("ij,ij->i", b.phi, b.phi)
        self._out = b.s_panel // self.refine  # output step of every s-node

    @property
    def n_cells(self) -> int:
        return self.basis.n_cells

    def _node_terms(self, G: np.ndarray) -> np.ndarray:
        Y = self._phi @ G
        if self.p.q == 2:
            Y = Y * Y - self._diag[:, None]
        return self._w[:, None] * Y

    def draw_batch(self, rng: np.random.Generator, count: int, chunk: int = 256) -> np.ndarray:
        """``(count, n + 1)`` path values."""
        out = np.zeros((count, self.n + 1))
        for start in range(0, count, chunk):
            k = min(chunk, count - start)
            G = rng.standard_normal((self.n_cells, k))
            terms = self._node_terms(G)
            # s-nodes are ordered by panel, refine * nodes-per-panel per output step
            steps = terms.reshape(self.n, -1, k).sum(axis=1)
            out[start:start + k, 1:] = np.cumsum(steps, axis=0).T
        return out

    def draw(self, rng: np.random.Generator, seed=None) -> ProcessPath:
        meta = {"q": self.p.q, "H": self.p.H, "method": "direct", "seed": seed}
        return ProcessPath(self.delta, self.draw_batch(rng, 1)[0], meta)

    def model_variance(self, k: int | None = None) -> float:
        """Exact ``Var(Z(t_k))`` of the discretized model (default: ``k = n``)."""
        k = self.n if k is None else int(k)
        sel = self._out < k
        phi = self._phi[sel]
        w = self._w[sel]
        if self.p.q == 1:
            v = w @ phi
            return float(v @ v)
        M = (phi.T * w) @ phi
        return float(2.0 * np.sum(M * M))


def simulate_hermite_direct(p: HurstParams, n: int, horizon: float, rng: np.random.Generator,
                            **kwargs) -> ProcessPath:
    """One path from :class:`DirectHermiteSimulator`."""
    return DirectHermiteSimulator(p, n, horizon, **kwargs).draw(rng)
