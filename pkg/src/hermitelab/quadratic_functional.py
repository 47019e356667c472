"""The normalized quadratic functional ``G_T`` and its variance diagnostics.

``G_T(t) = T^-(2 H0 - 1) int_0^{Tt} (X_s^2 - E X_s^2) ds``.

Centering always uses a computed second moment, never the sample mean.
Two versions exist:

* the continuum moment of ``X`` (product-integration rule: the kernel is
  replaced by its cell averages and the driver increments keep their exact
  fBm covariance), used by :func:`compute_G` by default;
* the exact moment of the simulated discrete model, used by
  :class:`GLadderModel`.  At the lattice resolutions used for Monte Carlo
  the two differ by a few percent for ``q >= 2``, enough to shift ``G_T``
  by a sizeable fraction of its standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft

from .gaussian_noise import fgn_autocovariance
from .hermite_sim import HermiteRankSimulator, ProcessPath
from .moving_average import (
    KernelSpec,
    check_admissible,
    discrete_second_moment,
    ma_filter,
    ma_weights,
)
from .special_math import HurstParams, limit_scale

__all__ = [
    "GtSample",
    "continuum_second_moment",
    "compute_G",
    "g_from_values",
    "covariance_grid",
    "gaussian_case_variance",
    "GLadderModel",
    "DecayReport",
    "chaos_decay_diagnostic",
    "limit_variance",
]

MIN_POINTS = 256


@dataclass(frozen=True)
class GtSample:
    T: float
    t: float
    value: float
    centering: str = "analytic"
    meta: dict = field(default_factory=dict)


def continuum_second_moment(x: KernelSpec, H: float, delta: float, n: int) -> np.ndarray:
    """``E[X_{k delta}^2]``, ``k = 0..n``, with cell-averaged kernel weights."""
    w = x.cell_averages(delta, n)
    gamma = delta ** (2.0 * H) * fgn_autocovariance(np.arange(n), H)
    return discrete_second_moment(w, gamma)


def g_from_values(values: np.ndarray, second_moment: np.ndarray, delta: float, T: float,
                  H0: float, upto: Sequence[int] | None = None) -> np.ndarray:
    """Trapezoid ``G`` for one or many rows of ``X`` values.

    Returns ``G`` at every grid index (or only at the indices ``upto``).
    """
    y = np.asarray(values) ** 2 - second_moment
    cum = np.zeros_like(y)
    cum[..., 1:] = np.cumsum(0.5 * delta * (y[..., 1:] + y[..., :-1]), axis=-1)
    if upto is not None:
        cum = cum[..., list(upto)]
    return cum / T ** (2.0 * H0 - 1.0)


def compute_G(X: ProcessPath, x: KernelSpec, p: HurstParams, t: float, T: float,
              second_moment: np.ndarray | None = None, centering: str = "analytic") -> GtSample:
    """``G_T(t)`` from a path of ``X`` covering ``[0, T t]``.

    ``second_moment`` defaults to :func:`continuum_second_moment`.  Pass the
    discrete-model moment for simulated paths when it is available.
    """
    if t < 0 or T <= 0:
        raise ValueError("need t >= 0 and T > 0")
    meta = {"q": p.q, "H": p.H, "kernel": x.tag, "seed": X.meta.get("seed")}
    if t == 0:
        return GtSample(T, t, 0.0, centering, meta)
    span = T * t
    if X.delta > span / MIN_POINTS * (1 + 1e-12):
        raise ValueError(f"grid too coarse: delta={X.delta:g} > T t / {MIN_POINTS}")
    k = int(round(span / X.delta))
    if k > X.n or abs(k * X.delta - span) > 1e-9 * span:
        raise ValueError("path does not cover [0, T t] on its grid")
    if second_moment is None:
        second_moment = continuum_second_moment(x, p.H, X.delta, k)
    g = g_from_values(X.values[: k + 1], second_moment[: k + 1], X.delta, T, p.H0, upto=[k])
    return GtSample(T, t, float(g[0]), centering, meta)


# ---------------------------------------------------------------------------
# Gaussian case
# ---------------------------------------------------------------------------

def _causal_apply(c: np.ndarray, B: np.ndarray, block: int = 512) -> np.ndarray:
    """``out[k] = sum_{i<=k} c[k-i] B[i]`` along axis 0, column blocks via FFT."""
    n = B.shape[0]
    L = scipy.fft.next_fast_len(2 * n, real=True)
    fc = scipy.fft.rfft(c, L)[:, None]
    out = np.empty_like(B)
    for j in range(0, B.shape[1], block):
        fb = scipy.fft.rfft(B[:, j:j + block], L, axis=0)
        out[:, j:j + block] = scipy.fft.irfft(fc * fb, L, axis=0)[:n]
    return out


def covariance_grid(x: KernelSpec, H: float, delta: float, n: int) -> np.ndarray:
    """``Cov(X_{k delta}, X_{l delta})`` for ``k, l = 0..n`` (``q = 1`` model).

    ``C = W Gamma W^T`` with ``W`` the lower-triangular Toeplitz matrix of
    kernel cell averages and ``Gamma`` the exact covariance of the driver
    increments over the cells, which integrates the ``|a-b|^(2H-2)``
    singularity exactly.
    """
    w = x.cell_averages(delta, n)
    g = delta ** (2.0 * H) * fgn_autocovariance(np.arange(n), H)
    idx = np.arange(n)
    gamma = g[np.abs(idx[:, None] - idx[None, :])]
    A = _causal_apply(w, gamma)
    del gamma
    C = _causal_apply(w, np.ascontiguousarray(A.T))
    out = np.zeros((n + 1, n + 1))
    out[1:, 1:] = 0.5 * (C + C.T)
    return out


def _trapezoid_weights(n: int, delta: float) -> np.ndarray:
    w = np.full(n + 1, delta)
    w[0] = w[-1] = 0.5 * delta
    return w


def gaussian_case_variance(x: KernelSpec, H: float, T: float, t: float = 1.0,
                           points_per_unit: int = 16, return_error: bool = False):
    """Deterministic ``Var(G_T(t))`` for the Gaussian driver (``q = 1``).

    ``T^-2(2H-1) int int_{[0,Tt]^2} 2 Cov(X_s, X_u)^2 ds du`` with the
    covariance on a grid of ``points_per_unit`` points per time unit and the
    trapezoid rule.  With ``return_error`` the difference to the half
    resolution is returned as an error estimate.
    """
    if not 0.75 < H < 1.0:
        raise ValueError("the Gaussian-case variance requires H in (3/4, 1)")
    if x.amplitude == 0.0 or t == 0:
        return (0.0, 0.0) if return_error else 0.0

    def at(ppu: int) -> float:
        delta = 1.0 / ppu
        n = int(round(T * t * ppu))
        C = covariance_grid(x, H, delta, n)
        w = _trapezoid_weights(n, delta)
        return float(T ** (-2.0 * (2.0 * H - 1.0)) * (w @ (2.0 * C * C) @ w))

    fine = at(points_per_unit)
    if not return_error:
        return fine
    return fine, abs(fine - at(max(points_per_unit // 2, 1)))


def limit_variance(p: HurstParams, x: KernelSpec, t: float = 1.0, rosenblatt_var: float = 1.0,
                   constant: str = "paper") -> float:
    """``b^2 Var(R(t))`` with ``Var(R(1)) = rosenblatt_var``; see :func:`limit_scale`."""
    b = limit_scale(p, x, constant)
    return b * b * rosenblatt_var * t ** (2.0 * p.Hprime)


# ---------------------------------------------------------------------------
# Monte Carlo ladder
# ---------------------------------------------------------------------------

class GLadderModel:
    """Joint simulation of ``G_T(t)`` for every rung of a ``T`` ladder.

    One driver path on ``[0, T_max t]`` serves all rungs: each rung uses the
    prefix ``[0, T t]``.  ``grid`` is the number of fGn lattice points per unit
    time and ``m`` lattice points make one output step, so the output step
    is ``m / grid``.
    """

    def __init__(self, p: HurstParams, x: KernelSpec, T_ladder: Sequence[float], t: float = 1.0,
                 grid: int = 256, m: int = 16):
        T_ladder = [float(T) for T in T_ladder]
        if not T_ladder:
            raise ValueError("empty T ladder")
        if any(b <= a for a, b in zip(T_ladder, T_ladder[1:])):
            raise ValueError("T ladder must be strictly increasing")
        if grid < 256:
            raise ValueError("grid must be >= 256 points per unit time")
        if not t > 0:
            raise ValueError("t must be positive")
        decision = check_admissible(x, p)
        if not decision.accepted:
            raise ValueError(f"kernel rejected: {decision.clause}")
        self.p, self.x, self.t = p, x, float(t)
        self.T_ladder = T_ladder
        self.delta = m / grid
        horizon = T_ladder[-1] * self.t
        n = horizon / self.delta
        self.n = int(round(n))
        self.rungs = []
        for T in T_ladder:
            k = T * self.t / self.delta
            if abs(k - round(k)) > 1e-9 * k:
                raise ValueError(f"T t = {T * self.t:g} is not a multiple of the output step")
            if self.delta > T * self.t / MIN_POINTS:
                raise ValueError(f"output step {self.delta:g} too coarse for T = {T:g}")
            self.rungs.append(int(round(k)))
        self.sim = HermiteRankSimulator(p, self.n, horizon, m)
        self.weights = ma_weights(x, self.delta, self.n)
        self.second_moment = discrete_second_moment(self.weights, self.sim.increment_autocov())

    def _g(self, dz: np.ndarray) -> np.ndarray:
        X = ma_filter(self.x, self.delta, dz)
        y = X * X - self.second_moment
        cum = np.cumsum(0.5 * self.delta * (y[..., 1:] + y[..., :-1]), axis=-1)
        out = np.stack([cum[..., k - 1] for k in self.rungs], axis=-1)
        scale = np.array([T ** (2.0 * self.p.H0 - 1.0) for T in self.T_ladder])
        return out / scale

    def sample_pair(self, rng: np.random.Generator) -> np.ndarray:
        """``(2, rungs)`` values of ``G`` from two independent drivers."""
        a, b = self.sim.increment_pair(rng)
        return self._g(np.stack([a, b]))


@dataclass(frozen=True)
class DecayReport:
    T: list
    var: list
    var_se: list
    target: float
    distance: list
    ordered: bool
    slope: float
    slope_ci: tuple
    predicted_slope: float
    status: str


def _slope(T: np.ndarray, resid: np.ndarray) -> float:
    return float(np.polyfit(np.log(T), np.log(np.abs(resid)), 1)[0])


def chaos_decay_diagnostic(p: HurstParams, x: KernelSpec, T_ladder: Sequence[float], paths: int,
                           rng: np.random.Generator, t: float = 1.0, grid: int = 256,
                           target: float | None = None, samples: np.ndarray | None = None,
                           n_boot: int = 1000) -> DecayReport:
    """Variance of ``G_T(t)`` along the ladder against its Rosenblatt limit.

    ``samples`` (paths x rungs) may be supplied; otherwise they are simulated
    here.  The residual ``Var - target`` is expected to shrink like
    ``T^(-2(2 - 2 H0))``; the fitted log-log slope carries a bootstrap
    interval obtained by resampling whole paths.  Fewer than 200 paths
    always give ``status='inconclusive'``.
    """
    from .chaos_tools import RosenblattSpec, rosenblatt_variance_extrapolated
    from .mc_engine import sample_cumulants

    if p.q < 2:
        raise ValueError("the decay diagnostic needs q >= 2")
    T = np.asarray(T_ladder, dtype=np.float64)
    if samples is None:
        model = GLadderModel(p, x, T_ladder, t=t, grid=grid)
        samples = np.concatenate([model.sample_pair(rng) for _ in range((paths + 1) // 2)])[:paths]
    samples = np.asarray(samples)
    if target is None:
        kappa2 = rosenblatt_variance_extrapolated(RosenblattSpec(p.Hprime), t)
        target = limit_variance(p, x, 1.0, kappa2)
    n = samples.shape[0]
    # too few paths for a jackknife error: keep the point estimates, report inconclusive
    few = n < 200
    est = [(float(np.var(samples[:, j], ddof=1)), math.nan) if few else sample_cumulants(samples[:, j], 2)
           for j in range(T.size)]
    var = np.array([e[0] for e in est])
    se = np.array([e[1] for e in est])
    dist = np.abs(var - target)
    ordered = bool(np.all(np.diff(dist) < 0))
    resid = var - target
    slope = _slope(T, resid) if T.size >= 2 else math.nan
    boot = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, n)
        v = samples[idx].var(axis=0, ddof=1)
        boot.append(_slope(T, v - target))
    lo, hi = (float(v) for v in np.percentile(boot, [2.5, 97.5]))
    predicted = -2.0 * (2.0 - 2.0 * p.H0)
    same_sign = bool(np.all(resid > 0) or np.all(resid < 0))
    if few or not same_sign or hi - lo > abs(slope):
        status = "inconclusive"
    elif lo <= predicted <= hi:
        status = "consistent"
    else:
        status = "inconsistent"
    return DecayReport(T=T.tolist(), var=var.tolist(), var_se=se.tolist(), target=float(target),
                       distance=dist.tolist(), ordered=ordered, slope=slope, slope_ci=(lo, hi),
                       predicted_slope=predicted, status=status)
