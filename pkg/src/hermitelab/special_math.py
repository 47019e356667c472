"""Closed-form constants, analytic identities and singular quadrature.

Everything here is pure and deterministic.  Gamma and beta values come from
:mod:`scipy.special`; the adaptive quadrature is QUADPACK via
:func:`scipy.integrate.quad`, using its algebraic-weight rule (QAWS) for the
endpoint singularities and its Fourier rule (QAWF) for oscillatory tails.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np
from scipy import integrate, special

if TYPE_CHECKING:
    from .moving_average import KernelSpec

__all__ = [
    "HurstParams",
    "QuadratureError",
    "QuadResult",
    "derive_params",
    "hermite_scale_c",
    "limit_constant_b",
    "limit_scale",
    "limit_prefactor",
    "beta_convolution_identity",
    "beta_convolution_numeric",
    "tempered_power_integral",
    "tempered_power_numeric",
    "tempered_power_extrapolated",
    "singular_double_integral",
    "singular_rectangle_integral",
    "exp_kernel_double_integral",
]


class QuadratureError(RuntimeError):
    """Raised when an adaptive rule cannot reach its tolerance."""

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class HurstParams:
    """Self-similarity exponents of a Hermite process and of its limits.

    Attributes
    ----------
    q : int
        Order of the Hermite process (number of Wiener chaos levels).
    H : float
        Self-similarity index of the driving process.
    H0 : float
        Per-factor kernel exponent ``1 + (H - 1)/q``.
    Hprime : float
        Index of the limiting Rosenblatt process, ``1 + (2H - 2)/q``.
    """

    q: int
    H: float
    H0: float
    Hprime: float

    @property
    def nclt(self) -> bool:
        """True when the quadratic functional has a Rosenblatt limit."""
        if not 0.5 < self.H < 1.0:
            return False
        return self.q >= 2 or self.H > 0.75

    @property
    def limit_index(self) -> float:
        """Index of the Rosenblatt limit; equals ``2H - 1`` when ``q == 1``."""
        return self.Hprime


def derive_params(q: int, H: float) -> HurstParams:
    """Validate ``(q, H)`` and derive ``H0`` and ``H'``.

    Raises
    ------
    ValueError
        If ``q < 1`` or ``H`` is outside ``(0, 1)``.
    """
    if int(q) != q or q < 1:
        raise ValueError(f"order q must be an integer >= 1, got {q!r}")
    if not 0.0 < H < 1.0:
        raise ValueError(f"H must lie in (0, 1), got {H!r}")
    q = int(q)
    H = float(H)
    H0 = 1.0 + (H - 1.0) / q
    # 2*H0 - 1 == 1 + (2H - 2)/q; computed the same way for exact agreement
    Hprime = 2.0 * H0 - 1.0
    return HurstParams(q=q, H=H, H0=H0, Hprime=Hprime)


def hermite_scale_c(p: HurstParams) -> float:
    """Normalizing constant ``c(H, q)`` of the Hermite kernel representation."""
    if not 0.5 < p.H < 1.0:
        raise ValueError("c(H, q) requires H in (1/2, 1)")
    b = special.beta(p.H0 - 0.5, 2.0 - 2.0 * p.H0)
    if not np.isfinite(b) or b <= 0:
        raise ArithmeticError(f"beta({p.H0 - 0.5}, {2 - 2 * p.H0}) is not finite")
    return math.sqrt(p.H * (2.0 * p.H - 1.0) / (math.factorial(p.q) * b**p.q))


def limit_prefactor(p: HurstParams) -> float:
    """``H(2H-1) / sqrt((H0 - 1/2)(4 H0 - 3))``, the kernel-free part of b."""
    return p.H * (2.0 * p.H - 1.0) / math.sqrt((p.H0 - 0.5) * (4.0 * p.H0 - 3.0))


def limit_constant_b(p: HurstParams, x: "KernelSpec", epsrel: float = 1e-10) -> float:
    """Multiplicative constant of the Rosenblatt limit of ``G_T``.

    The kernel must be admissible for ``p``; see
    :func:`hermitelab.moving_average.check_admissible`.  For ``q = 1`` the
    exponent vanishes and the double integral collapses to ``(int x)^2``.
    """
    from .moving_average import check_admissible

    decision = check_admissible(x, p)
    if not decision.accepted:
        raise ValueError(f"inadmissible kernel: {decision.clause}")
    alpha = (p.q - 1) * (2.0 * p.H0 - 2.0)
    if p.q == 1:
        integral = x.integral() ** 2
    else:
        integral = singular_double_integral(x, alpha, math.inf, math.inf, epsrel=epsrel).value
    return limit_prefactor(p) * integral


def limit_scale(p: HurstParams, x: "KernelSpec", constant: str = "corrected") -> float:
    """Scale of the Rosenblatt limit of ``G_T``.

    ``constant='paper'`` returns :func:`limit_constant_b`.  ``'corrected'``
    returns ``q * b``: the second-chaos coefficient of ``X^2`` in the product
    formula is ``(q-1)! q^2 = q * q!``, not ``q!``, which multiplies the limit
    by ``q``.  Both agree for ``q = 1``.
    """
    if constant not in ("paper", "corrected"):
        raise ValueError("constant must be 'paper' or 'corrected'")
    b = limit_constant_b(p, x)
    return b if constant == "paper" else p.q * b


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def beta_convolution_identity(z1: float, z2: float, H0: float) -> float:
    """Closed form of ``int (z1-y)_+^(H0-3/2) (z2-y)_+^(H0-3/2) dy``."""
    _check_h0(H0)
    if z1 < 0 or z2 < 0:
        raise ValueError("z1 and z2 must be nonnegative")
    d = abs(z1 - z2)
    if d == 0.0:
        raise ZeroDivisionError("integral diverges on the diagonal z1 == z2")
    return special.beta(H0 - 0.5, 2.0 - 2.0 * H0) * d ** (2.0 * H0 - 2.0)


def beta_convolution_numeric(z1: float, z2: float, H0: float, epsrel: float = 1e-12) -> float:
    """Adaptive singular quadrature of the left-hand side of the beta identity.

    With ``u = min(z1, z2) - y`` and ``d = |z1 - z2|`` the integrand is
    ``u^g (u + d)^g`` on ``(0, inf)``.  The piece on ``[0, d]`` carries an
    algebraic endpoint weight; the tail is mapped to ``[0, 1]`` by
    ``u = d / v`` which leaves another algebraic endpoint weight at ``v = 0``.
    """
    _check_h0(H0)
    d = abs(z1 - z2)
    if d == 0.0:
        raise ZeroDivisionError("integral diverges on the diagonal z1 == z2")
    g = H0 - 1.5
    head, _ = integrate.quad(
        lambda u: (u + d) ** g, 0.0, d, weight="alg", wvar=(g, 0.0),
        epsabs=0.0, epsrel=epsrel, limit=200,
    )
    # u = d/v: u^g (u+d)^g du = d^(2g+1) v^(-2g-2) (1+v)^g dv
    tail, _ = integrate.quad(
        lambda v: (1.0 + v) ** g, 0.0, 1.0, weight="alg", wvar=(-2.0 * g - 2.0, 0.0),
        epsabs=0.0, epsrel=epsrel, limit=200,
    )
    return head + d ** (2.0 * g + 1.0) * tail


def tempered_power_integral(H0: float) -> complex:
    """Closed form of ``int_0^inf exp(-iu) u^(H0-3/2) du``."""
    _check_h0(H0)
    a = H0 - 0.5
    return complex(np.exp(-0.5j * math.pi * a) * special.gamma(a))


def tempered_power_numeric(H0: float, eps: float, epsrel: float = 1e-12) -> complex:
    """``int_0^inf exp(-eps u) exp(-iu) u^(H0-3/2) du`` by adaptive quadrature.

    ``[0, 1]`` uses the algebraic weight for the endpoint singularity and
    ``[1, inf)`` the Fourier-integral rule, so ``eps = 0`` is also accepted.
    """
    _check_h0(H0)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    g = H0 - 1.5
    opts = dict(epsabs=0.0, epsrel=epsrel, limit=400)
    re0, _ = integrate.quad(lambda u: math.exp(-eps * u) * math.cos(u), 0.0, 1.0,
                            weight="alg", wvar=(g, 0.0), **opts)
    im0, _ = integrate.quad(lambda u: math.exp(-eps * u) * math.sin(u), 0.0, 1.0,
                            weight="alg", wvar=(g, 0.0), **opts)
    tail = lambda u: math.exp(-eps * u) * u**g  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re1, _ = integrate.quad(tail, 1.0, math.inf, weight="cos", wvar=1.0, epsabs=1e-15, limlst=200)
        im1, _ = integrate.quad(tail, 1.0, math.inf, weight="sin", wvar=1.0, epsabs=1e-15, limlst=200)
    return complex(re0 + re1, -(im0 + im1))


def tempered_power_extrapolated(H0: float, eps: Sequence[float] = (1e-2, 1e-3, 1e-4)) -> complex:
    """Richardson extrapolation of the tempered integral to ``eps = 0``.

    The tempered value is analytic in ``eps`` near zero, so the sequence is
    treated as a polynomial in ``eps`` (Neville tableau at zero).
    """
    xs = [float(e) for e in eps]
    ys = [tempered_power_numeric(H0, e) for e in xs]
    n = len(xs)
    table = list(ys)
    for level in range(1, n):
        for i in range(n - level):
            x0, x1 = xs[i], xs[i + level]
            table[i] = (x0 * table[i + 1] - x1 * table[i]) / (x0 - x1)
    return table[0]


# ---------------------------------------------------------------------------
# singular double integrals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    upper: tuple[float, float]


def singular_rectangle_integral(
    f: Callable[[float], float],
    g: Callable[[float], float],
    upper1: float,
    upper2: float,
    alpha: float,
    breaks_f: Sequence[float] = (),
    breaks_g: Sequence[float] = (),
    epsrel: float = 1e-10,
    epsabs: float = 1e-14,
    limit: int = 200,
    scale: float | None = None,
) -> tuple[float, float]:
    """``int_0^U1 int_0^U2 f(a) g(b) |a - b|^alpha db da`` on a finite box.

    The diagonal singularity is isolated with ``w = a - b``::

        int_{-U2}^{U1} |w|^alpha  C(w) dw,   C(w) = int f(b + w) g(b) db

    where ``b`` ranges over ``[max(0, -w), min(U2, U1 - w)]``.  Both halves of
    the outer integral get an algebraic endpoint weight at ``w = 0``.  When
    ``scale`` is given, both integrals are also split at ``scale * 4^k`` so
    slowly decaying integrands on long ranges are resolved.
    Returns ``(value, error_estimate)``.
    """
    if not -1.0 < alpha <= 0.0:
        raise ValueError(f"alpha must lie in (-1, 0], got {alpha}")
    if upper1 <= 0 or upper2 <= 0:
        return 0.0, 0.0
    U1, U2 = float(upper1), float(upper2)

    def cross(w: float) -> float:
        lo = max(0.0, -w)
        hi = min(U2, U1 - w)
        if hi <= lo:
            return 0.0
        pts = [p for p in breaks_g if lo < p < hi]
        pts += [p - w for p in breaks_f if lo < p - w < hi]
        pts += [p for p in _geometric(scale, hi) if lo < p < hi]
        # inner accuracy is tighter than the outer target; shortfalls show up
        # in the outer error estimate, so the per-call warning is not useful
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda b: f(b + w) * g(b), lo, hi,
                                    points=sorted(set(pts)) or None,
                                    epsabs=epsabs * 1e-2, epsrel=epsrel * 1e-2, limit=limit)
        return val

    # kinks of C(w): where the b-range changes shape or crosses a breakpoint
    kinks = {U1 - U2}
    kinks.update(bf - bg for bf in breaks_f for bg in breaks_g)
    kinks.update(bf for bf in breaks_f)
    kinks.update(-bg for bg in breaks_g)
    kinks.update(bf - U2 for bf in breaks_f)
    kinks.update(U1 - bg for bg in breaks_g)

    total = 0.0
    err = 0.0
    for sign, span in ((1.0, U1), (-1.0, U2)):
        inner = {k * sign for k in kinks if 0.0 < k * sign < span}
        inner.update(p for p in _geometric(scale, span) if p < span)
        nodes = [0.0] + sorted(inner) + [span]
        for i, (a, b) in enumerate(zip(nodes[:-1], nodes[1:])):
            if b - a <= 0:
                continue
            h = lambda w: cross(sign * w)  # noqa: E731
            if i == 0 and alpha != 0.0:
                val, e = integrate.quad(h, a, b, weight="alg", wvar=(alpha, 0.0),
                                        epsabs=epsabs, epsrel=epsrel, limit=limit)
            else:
                val, e = integrate.quad(lambda w: w**alpha * h(w), a, b,
                                        epsabs=epsabs, epsrel=epsrel, limit=limit)
            total += val
            err += e
    return total, err


def singular_double_integral(
    x: "KernelSpec",
    alpha: float,
    upper1: float = math.inf,
    upper2: float = math.inf,
    epsrel: float = 1e-10,
    tail_tol: float = 1e-10,
    max_panels: int = 400,
) -> QuadResult:
    """``int int x(u) x(v) |u - v|^alpha`` over ``[0, U1] x [0, U2]``.

    Infinite bounds are truncated at ``U`` where the kernel's analytic tail
    bound drops below ``tail_tol`` times the running value.

    Raises
    ------
    QuadratureError
        If the truncation needs more than ``max_panels`` doublings or the
        quadrature error estimate exceeds the requested accuracy.
    """
    if not -1.0 < alpha <= 0.0:
        raise ValueError(f"alpha must lie in (-1, 0], got {alpha}")
    U1 = x.truncation(upper1, tail_tol)
    U2 = x.truncation(upper2, tail_tol)
    if not (np.isfinite(U1) and np.isfinite(U2)):
        raise QuadratureError("no finite truncation satisfies the tail bound", achieved=math.inf)
    breaks = x.breakpoints
    value, err = singular_rectangle_integral(
        x.eval, x.eval, U1, U2, alpha, breaks_f=breaks, breaks_g=breaks, epsrel=epsrel,
        limit=max_panels, scale=x.scale,
    )
    if abs(value) > 0 and err > max(1e3 * epsrel * abs(value), 1e-12):
        raise QuadratureError(
            f"singular quadrature error {err:.3g} exceeds tolerance", achieved=err / abs(value)
        )
    return QuadResult(value=value, error=err, upper=(U1, U2))


def _geometric(scale: float | None, upper: float) -> list[float]:
    if scale is None or not upper > 4.0 * scale:
        return []
    n = int(math.log(upper / scale, 4.0))
    return [scale * 4.0**k for k in range(1, n + 1)]


def exp_kernel_double_integral(theta: float, alpha: float) -> float:
    """``int int_{R_+^2} e^{-theta u} e^{-theta v} |u - v|^alpha`` in closed form."""
    return special.gamma(alpha + 1.0) / theta ** (alpha + 2.0)


def _check_h0(H0: float) -> None:
    if not 0.5 < H0 < 1.0:
        raise ValueError(f"H0 must lie in (1/2, 1), got {H0}")
