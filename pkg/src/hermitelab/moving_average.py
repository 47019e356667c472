"""Moving averages ``X_t = int_0^t x(t - u) dZ(u)`` and their covariances."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from . import kernels
from .hermite_sim import ProcessPath
from .special_math import (
    HurstParams,
    QuadratureError,
    singular_double_integral,
    singular_rectangle_integral,
)

__all__ = [
    "KernelSpec",
    "parse_kernel",
    "Admissibility",
    "check_admissible",
    "ma_weights",
    "ma_filter",
    "build_ma_path",
    "ou_path",
    "stationary_ou_path",
    "ma_covariance",
    "discrete_second_moment",
]

_KINDS = {"exp": "exponential", "power": "power", "box": "compact"}


@dataclass(frozen=True)
class KernelSpec:
    """Moving-average kernel on ``[0, inf)``.

    ``exp``:   ``x(u) = a exp(-theta u)``
    ``power``: ``x(u) = a (cut + u)^(-rho)``
    ``box``:   ``x(u) = a 1{u <= T0}``

    ``param`` holds ``theta``, ``rho`` or ``T0``; ``a`` is ``amplitude``.
    Instances are hashable and picklable so they can travel to workers.
    """

    kind: str
    param: float
    cut: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.param > 0:
            raise ValueError("kernel parameter must be positive")
        if self.kind == "power" and not self.cut > 0:
            raise ValueError("power kernel needs cut > 0")

    @property
    def tag(self) -> str:
        if self.kind == "exp":
            base = f"exp:theta={self.param:g}"
        elif self.kind == "power":
            base = f"power:rho={self.param:g},cut={self.cut:g}"
        else:
            base = f"box:T0={self.param:g}"
        return base if self.amplitude == 1.0 else f"{base},amp={self.amplitude:g}"

    @property
    def decay_tag(self) -> str:
        return _KINDS[self.kind]

    def eval(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "exp":
            out = np.exp(-self.param * u)
        elif self.kind == "power":
            out = (self.cut + u) ** (-self.param)
        else:
            out = (u <= self.param).astype(np.float64)
        out = self.amplitude * out
        return float(out) if out.ndim == 0 else out

    def l1_norm(self) -> float:
        a = abs(self.amplitude)
        if self.kind == "exp":
            return a / self.param
        if self.kind == "power":
            rho = self.param
            return a * self.cut ** (1.0 - rho) / (rho - 1.0) if rho > 1.0 else math.inf
        return a * self.param

    def integral(self) -> float:
        """``int_0^inf x``; finite only when the kernel is integrable."""
        return math.copysign(self.l1_norm(), self.amplitude) if self.amplitude else 0.0

    def antiderivative(self, u):
        """``int_0^u x`` (vectorized)."""
        u = np.asarray(u, dtype=np.float64)
        a = self.amplitude
        if self.kind == "exp":
            return a * -np.expm1(-self.param * u) / self.param
        if self.kind == "power":
            rho, c = self.param, self.cut
            if rho == 1.0:
                return a * np.log1p(u / c)
            return a * (c ** (1.0 - rho) - (c + u) ** (1.0 - rho)) / (rho - 1.0)
        return a * np.minimum(u, self.param)

    def cell_averages(self, delta: float, n: int) -> np.ndarray:
        """Averages of ``x`` over ``[j delta, (j+1) delta]``, ``j = 0..n-1``."""
        F = self.antiderivative(delta * np.arange(n + 1))
        return np.diff(F) / delta

    def tail_l1(self, U: float) -> float:
        """``int_U^inf |x|``."""
        a = abs(self.amplitude)
        if self.kind == "exp":
            return a * math.exp(-self.param * U) / self.param
        if self.kind == "power":
            rho = self.param
            return a * (self.cut + U) ** (1.0 - rho) / (rho - 1.0) if rho > 1.0 else math.inf
        return a * max(self.param - U, 0.0)

    @property
    def scale(self) -> float:
        """Length over which the kernel changes appreciably."""
        return {"exp": 1.0 / self.param, "power": self.cut, "box": self.param}[self.kind]

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.param,) if self.kind == "box" else ()

    def truncation(self, upper: float, tol: float) -> float:
        """Finite cut-off ``U <= upper`` whose relative L1 tail is below ``tol``."""
        if math.isfinite(upper):
            return float(upper)
        l1 = self.l1_norm()
        if l1 == 0.0:
            return 1.0
        if not math.isfinite(l1):
            return math.inf
        if self.kind == "exp":
            return math.log(1.0 / tol) / self.param
        if self.kind == "power":
            rho = self.param
            return self.cut * (tol ** (-1.0 / (rho - 1.0)) - 1.0)
        return self.param

    def double_integral(self, alpha: float) -> float | None:
        """Closed form of ``int int x(u) x(v) |u - v|^alpha`` when one exists."""
        a2 = self.amplitude**2
        if self.kind == "exp":
            return a2 * math.gamma(alpha + 1.0) / self.param ** (alpha + 2.0)
        if self.kind == "box":
            return a2 * 2.0 * self.param ** (alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0))
        return None

    def scaled(self, c: float) -> "KernelSpec":
        return replace(self, amplitude=self.amplitude * c)

    def abs(self) -> "KernelSpec":
        return replace(self, amplitude=abs(self.amplitude))


_TAG = re.compile(r"^(exp|power|box):(.*)$")


def parse_kernel(tag: str) -> KernelSpec:
    """Parse a registry tag such as ``exp:theta=1`` or ``power:rho=2,cut=1``."""
    m = _TAG.match(tag.strip())
    if not m:
        raise ValueError(f"unrecognised kernel tag {tag!r}")
    kind, rest = m.groups()
    fields = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        try:
            fields[key.strip()] = float(val)
        except ValueError:
            raise ValueError(f"bad value in kernel tag {tag!r}") from None
    allowed = {"exp": {"theta"}, "power": {"rho", "cut"}, "box": {"T0"}}[kind] | {"amp"}
    unknown = set(fields) - allowed
    if unknown:
        raise ValueError(f"unknown kernel fields {sorted(unknown)} in {tag!r}")
    main = {"exp": "theta", "power": "rho", "box": "T0"}[kind]
    if main not in fields:
        raise ValueError(f"kernel tag {tag!r} lacks {main}")
    return KernelSpec(kind, fields[main], cut=fields.get("cut", 1.0), amplitude=fields.get("amp", 1.0))


@dataclass(frozen=True)
class Admissibility:
    """Outcome of :func:`check_admissible`; ``status`` is accepted/rejected/undetermined."""

    status: str
    clause: str = ""
    integral: float = math.nan

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def check_admissible(x: KernelSpec, p: HurstParams) -> Admissibility:
    """Decide whether ``x`` satisfies the hypotheses of the limit theorems for ``p``."""
    if not 0.5 < p.H < 1.0:
        return Admissibility("rejected", "H outside (1/2, 1)")
    if p.q == 1 and p.H <= 0.75:
        return Admissibility("rejected", "CLT regime, out of scope")
    if not math.isfinite(x.l1_norm()):
        return Admissibility("rejected", "kernel not integrable on [0, inf)")
    if x.amplitude == 0.0:
        return Admissibility("accepted", integral=0.0)
    try:
        res = singular_double_integral(x.abs(), 2.0 * p.H - 2.0, epsrel=1e-8)
    except QuadratureError as exc:
        return Admissibility("undetermined", f"quadrature failed: {exc}")
    if not math.isfinite(res.value):
        return Admissibility("rejected", "double integral with |u-v|^(2H-2) diverges")
    return Admissibility("accepted", integral=res.value)


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

def ma_weights(x: KernelSpec, delta: float, n: int) -> np.ndarray:
    """Midpoint weights ``x((j + 1/2) delta)``, ``j = 0..n-1``."""
    return x.eval((np.arange(n) + 0.5) * delta)


def ma_filter(x: KernelSpec, delta: float, dz: np.ndarray) -> np.ndarray:
    """Midpoint moving average of increments along the last axis.

    Returns ``X`` with ``X[..., 0] = 0`` and
    ``X[..., k] = sum_{i<k} x((k - i - 1/2) delta) dz[..., i]``.
    """
    dz = np.asarray(dz, dtype=np.float64)
    n = dz.shape[-1]
    c = ma_weights(x, delta, n)
    shape = (1,) * (dz.ndim - 1) + (n,)
    conv = signal.fftconvolve(dz, c.reshape(shape), axes=-1)[..., :n]
    out = np.zeros(dz.shape[:-1] + (n + 1,))
    out[..., 1:] = conv
    return out


def build_ma_path(x: KernelSpec, Z: ProcessPath) -> ProcessPath:
    """``X`` from a driver path by the midpoint Riemann-Stieltjes sum."""
    values = ma_filter(x, Z.delta, Z.increments())
    return ProcessPath(Z.delta, values, {**Z.meta, "kernel": x.tag})


def ou_path(lam: float, sigma: float, xi: float, Z: ProcessPath, rule: str = "trapezoid") -> ProcessPath:
    """Hermite Ornstein-Uhlenbeck path driven by ``Z``.

    ``rule='trapezoid'`` uses the integration-by-parts form
    ``xi e^{-lam t} + sigma Z(t) - lam sigma int_0^t e^{-lam (t-u)} Z(u) du``
    with the trapezoid rule; ``rule='midpoint'`` uses the Riemann-Stieltjes
    sum with midpoint weights, matching :func:`build_ma_path`.
    """
    if not lam > 0 or not sigma > 0:
        raise ValueError("lam and sigma must be positive")
    z = Z.values
    d = Z.delta
    a = math.exp(-lam * d)
    decay = np.exp(-lam * Z.times)
    if rule == "trapezoid":
        u = np.empty_like(z)
        u[0] = 0.0
        u[1:] = 0.5 * d * (a * z[:-1] + z[1:])
        integral = kernels.linear_recursion(a, u)
        x = xi * decay + sigma * z - lam * sigma * integral
    elif rule == "midpoint":
        u = np.empty_like(z)
        u[0] = 0.0
        u[1:] = sigma * math.exp(-0.5 * lam * d) * np.diff(z)
        x = xi * decay + kernels.linear_recursion(a, u)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return ProcessPath(d, x, {**Z.meta, "kernel": f"ou:lambda={lam:g},sigma={sigma:g}"})


def stationary_ou_path(lam: float, sigma: float, Z: ProcessPath, burn_in: float | None = None,
                       rule: str = "trapezoid") -> ProcessPath:
    """Approximately stationary OU path from a driver simulated on ``[-B, T]``.

    ``Z`` must cover ``B + T``; the first ``B`` time units (``B = 8/lam`` by
    default) build the infinite-past initial condition and are dropped.
    """
    B = 8.0 / lam if burn_in is None else burn_in
    k0 = int(round(B / Z.delta))
    if k0 >= Z.n:
        raise ValueError("driver path does not extend beyond the burn-in")
    full = ou_path(lam, sigma, 0.0, Z, rule=rule)
    return ProcessPath(Z.delta, full.values[k0:], {**full.meta, "burn_in": k0 * Z.delta})


# ---------------------------------------------------------------------------
# covariances
# ---------------------------------------------------------------------------

def ma_covariance(x: KernelSpec, H: float, s: float, u: float, epsrel: float = 1e-9) -> float:
    """``H(2H-1) int_0^s int_0^u x(s-a) x(u-b) |a-b|^(2H-2) db da`` by singular quadrature."""
    if s < 0 or u < 0:
        raise ValueError("s and u must be nonnegative")
    if s == 0 or u == 0 or x.amplitude == 0.0:
        return 0.0
    bf = [s - b for b in x.breakpoints if 0 < s - b < s]
    bg = [u - b for b in x.breakpoints if 0 < u - b < u]
    val, _ = singular_rectangle_integral(
        lambda a: x.eval(s - a), lambda b: x.eval(u - b), s, u, 2.0 * H - 2.0,
        breaks_f=bf, breaks_g=bg, epsrel=epsrel,
    )
    return H * (2.0 * H - 1.0) * val


def discrete_second_moment(weights: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """``E[X_k^2]`` for ``X_k = sum_{i<k} weights[k-1-i] dz_i``.

    ``gamma[d]`` is the autocovariance of the stationary increments ``dz``.
    Uses ``S_k = sum_{i<k} (c_i^2 g_0 + 2 c_i sum_{j<i} c_j g_{i-j})``.
    """
    c = np.asarray(weights, dtype=np.float64)
    g = np.asarray(gamma, dtype=np.float64)
    n = c.size
    conv = signal.fftconvolve(c, g[:n])[:n]  # sum_{j<=i} c_j g_{i-j}
    cross = conv - c * g[0]
    terms = c * c * g[0] + 2.0 * c * cross
    return np.concatenate([[0.0], np.cumsum(terms)])
