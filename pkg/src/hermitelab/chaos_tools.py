"""Discrete Wiener-chaos algebra and Rosenblatt reference kernels.

A :class:`ChaosKernel` of order ``m`` stores its integrand in an orthonormal
basis of indicator functions, i.e. with the measure weights already folded
in.  Integrals then become plain tensor contractions and the discrete
multiple integral of ``f`` against a standard Gaussian vector ``G`` is the
Wick-ordered polynomial ``<f, :G^{(x)m}:>``.
"""

from __future__ import annotations

import itertools
import math
import string
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from ._powerkernel import build_basis, cells_for_total, graded_edges, lower_for_tail, tail_bound

__all__ = [
    "ChaosKernel",
    "symmetrize",
    "contract",
    "inner",
    "multiple_integral",
    "ProductFormulaReport",
    "product_formula_check",
    "RosenblattSpec",
    "rosenblatt_kernel",
    "rosenblatt_min_cells",
    "rosenblatt_variance_extrapolated",
    "chaos2_cumulant",
    "chaos2_sample",
]

MAX_ORDER = 4
MAX_GRID_ORDER2 = 4096


@dataclass(frozen=True)
class ChaosKernel:
    """Dense kernel of a multiple integral.

    Parameters
    ----------
    entries : ndarray
        ``order``-way array with equal side lengths; weights folded in.
    step : float, optional
        Grid step of a uniform discretization, kept for bookkeeping.
    """

    entries: np.ndarray
    step: float | None = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim < 1:
            raise ValueError("a chaos kernel needs order >= 1")
        if len(set(e.shape)) != 1:
            raise ValueError(f"all sides must agree, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("kernel entries must be finite")
        object.__setattr__(self, "entries", e)

    @property
    def order(self) -> int:
        return self.entries.ndim

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.entries**2)))

    def scaled(self, c: float) -> "ChaosKernel":
        return ChaosKernel(c * self.entries, self.step)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        scale = max(np.abs(self.entries).max(initial=0.0), 1.0)
        return all(
            np.allclose(self.entries, np.transpose(self.entries, perm), rtol=0, atol=tol * scale)
            for perm in itertools.permutations(range(self.order))
        )

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of an order-2 kernel viewed as a symmetric matrix."""
        if self.order != 2:
            raise ValueError("eigenvalues are defined for order-2 kernels")
        if not self.is_symmetric(1e-10):
            raise np.linalg.LinAlgError("order-2 kernel is not symmetric")
        return np.linalg.eigvalsh(self.entries)


def _check_order(f: ChaosKernel) -> None:
    if f.order > MAX_ORDER:
        raise ValueError(f"dense chaos algebra is limited to order {MAX_ORDER}")


def symmetrize(f: ChaosKernel) -> ChaosKernel:
    """Average of ``f`` over all permutations of its arguments."""
    _check_order(f)
    if f.order == 1:
        return f
    perms = list(itertools.permutations(range(f.order)))
    acc = np.zeros_like(f.entries)
    for perm in perms:
        acc += np.transpose(f.entries, perm)
    return ChaosKernel(acc / len(perms), f.step)


def contract(f: ChaosKernel, g: ChaosKernel, r: int) -> ChaosKernel | float:
    """``f (x)_r g``: pair the last ``r`` arguments of ``f`` with those of ``g``.

    Returns a float when ``r == p == q`` (the inner product).
    """
    p, q = f.order, g.order
    if not 0 <= r <= min(p, q):
        raise ValueError(f"contraction index r={r} outside [0, {min(p, q)}]")
    if f.size != g.size or f.step != g.step:
        raise ValueError("kernels live on different grids")
    out = np.tensordot(f.entries, g.entries, axes=(list(range(p - r, p)), list(range(q - r, q))))
    if out.ndim == 0:
        return float(out)
    return ChaosKernel(out, f.step)


def inner(f: ChaosKernel, g: ChaosKernel) -> float:
    if f.order != g.order:
        raise ValueError("inner product needs equal orders")
    return contract(f, g, f.order)


def _evaluate(h: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``<h, G^{(x)j}>`` for each column of ``G``."""
    j = h.ndim
    if j == 0:
        return np.full(G.shape[1], float(h))
    idx = string.ascii_lowercase[:j]
    spec = idx + "," + ",".join(f"{c}z" for c in idx) + "->z"
    return np.einsum(spec, h, *([G] * j), optimize=True)


def multiple_integral(f: ChaosKernel, G: np.ndarray) -> np.ndarray | float:
    """Discrete multiple integral ``I_m(f)`` on the Gaussian vector(s) ``G``.

    ``G`` has shape ``(d,)`` or ``(d, k)`` for ``k`` independent draws.  For a
    symmetric ``f``::

        I_m(f) = sum_k (-1)^k m! / (2^k k! (m-2k)!) <tr^k f, G^{(x)(m-2k)}>

    which is the Hermite (Wick) polynomial of the discrete white noise.
    """
    _check_order(f)
    G = np.asarray(G, dtype=np.float64)
    single = G.ndim == 1
    if single:
        G = G[:, None]
    if G.shape[0] != f.size:
        raise ValueError("noise vector does not match the kernel grid")
    m = f.order
    h = symmetrize(f).entries
    total = np.zeros(G.shape[1])
    for k in range(m // 2 + 1):
        coef = (-1) ** k * math.factorial(m) / (2**k * math.factorial(k) * math.factorial(m - 2 * k))
        total += coef * _evaluate(h, G)
        if h.ndim >= 2:
            h = np.trace(h, axis1=0, axis2=1)
    return float(total[0]) if single else total


@dataclass(frozen=True)
class ProductFormulaReport:
    max_residual: float
    inner: float
    mean_product: float
    se_product: float
    mean_i2: float
    se_i2: float
    paths: int


def product_formula_check(f: ChaosKernel, g: ChaosKernel, rng: np.random.Generator,
                          paths: int = 10_000) -> ProductFormulaReport:
    """Check ``I_1(f) I_1(g) = I_2(sym(f (x) g)) + <f, g>`` on shared noise."""
    if f.order != 1 or g.order != 1:
        raise ValueError("product_formula_check expects order-1 kernels")
    if f.size > 512:
        raise ValueError("grid limited to 512 points")
    G = rng.standard_normal((f.size, paths))
    prod = multiple_integral(f, G) * multiple_integral(g, G)
    fg = inner(f, g)
    i2 = multiple_integral(symmetrize(contract(f, g, 0)), G)
    resid = np.abs(prod - (i2 + fg))
    sd = lambda v: float(v.std(ddof=1) / math.sqrt(v.size))  # noqa: E731
    return ProductFormulaReport(
        max_residual=float(resid.max()), inner=fg,
        mean_product=float(prod.mean()), se_product=sd(prod),
        mean_i2=float(i2.mean()), se_i2=sd(i2), paths=paths,
    )


# ---------------------------------------------------------------------------
# Rosenblatt process
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RosenblattSpec:
    """Rosenblatt process of index ``Hr`` with its time- and spectral-domain constants."""

    Hr: float

    def __post_init__(self):
        if not 0.5 < self.Hr < 1.0:
            raise ValueError("Hr must lie in (1/2, 1)")

    @property
    def D(self) -> float:
        return 0.5 * (self.Hr + 1.0)

    @property
    def A1(self) -> float:
        H = self.Hr
        return math.sqrt(0.5 * H * (2.0 * H - 1.0)) / special.beta(0.5 * H, 1.0 - H)

    @property
    def A1_from_D(self) -> float:
        D = self.D
        return math.sqrt((D - 0.5) * (4.0 * D - 3.0)) / special.beta(D - 0.5, 2.0 - 2.0 * D)

    @property
    def A2(self) -> float:
        H = self.Hr
        return math.sqrt(H * (2.0 * H - 1.0) / 2.0) / (2.0 * special.gamma(1.0 - H) * math.sin(0.5 * H * math.pi))

    @property
    def A2_from_D(self) -> float:
        D = self.D
        den = 2.0 * (2.0 * special.gamma(2.0 - 2.0 * D) * math.sin(math.pi * (D - 0.5))) ** 2
        return math.sqrt((2.0 * D - 1.0) * (4.0 * D - 3.0) / den)


def _default_lower(spec: RosenblattSpec, t: float, tail_tol: float) -> float:
    return lower_for_tail(2, spec.D, spec.A1**2, t, 0.5 * tail_tol * t ** (2.0 * spec.Hr))


def rosenblatt_min_cells(spec: RosenblattSpec, t: float = 1.0, tail_tol: float = 1e-5) -> int | None:
    """Smallest ``n`` accepted by :func:`rosenblatt_kernel`, or None if none is.

    The truncation point grows like ``tol^(-1/(1 - Hr))``, so the graded cells
    alone exceed the grid limit once ``Hr`` gets close to 1.
    """
    with np.errstate(over="ignore"):
        lower = _default_lower(spec, t, tail_tol)
    if not np.isfinite(lower):
        return None
    lo, hi = 8, MAX_GRID_ORDER2
    if graded_edges(t, 8, lower).size - 1 > hi:
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        try:
            cells_for_total(t, mid, lower)
            hi = mid
        except ValueError:
            lo = mid + 1
    return lo


def rosenblatt_kernel(spec: RosenblattSpec, t: float, n: int, tail_tol: float = 1e-5,
                      lower: float | None = None) -> ChaosKernel:
    """Order-2 kernel ``A1 int_0^t (s - xi1)_+^(Hr/2-1) (s - xi2)_+^(Hr/2-1) ds``.

    ``n`` is the total number of ``xi`` cells on ``[-L, t]`` (uniform on
    ``[0, t]``, graded to the left); ``L`` follows from the analytic tail
    bound unless given.  ``2 |f|^2`` approximates ``t^(2 Hr)`` from below.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if n > MAX_GRID_ORDER2:
        raise ValueError(f"order-2 grids are limited to {MAX_GRID_ORDER2} cells")
    A1, D = spec.A1, spec.D
    scale = t ** (2.0 * spec.Hr)
    if lower is None:
        lower = _default_lower(spec, t, tail_tol)
    tail = 2.0 * tail_bound(2, D, A1**2, t, lower) / scale
    if tail > 1e-4:
        warnings.warn(f"relative tail mass {tail:.2e} outside the truncated domain", stacklevel=2)
    basis = build_basis(D - 1.5, cells_for_total(t, n, lower))
    phi = basis.phi
    M = A1 * (phi.T * basis.s_weights) @ phi
    M = 0.5 * (M + M.T)
    return ChaosKernel(M)


def rosenblatt_variance_extrapolated(spec: RosenblattSpec, t: float = 1.0, n: int = 2048) -> float:
    """``kappa_2`` of the kernel extrapolated in the grid size.

    The discretization deficit decays like ``n^-(2 Hr - 1)``; one Richardson
    step between ``n/2`` and ``n`` removes the leading term.
    """
    k1 = chaos2_cumulant(rosenblatt_kernel(spec, t, n // 2), 2)
    k2 = chaos2_cumulant(rosenblatt_kernel(spec, t, n), 2)
    return k2 + (k2 - k1) / (2.0 ** (2.0 * spec.Hr - 1.0) - 1.0)


# ---------------------------------------------------------------------------
# second chaos
# ---------------------------------------------------------------------------

def chaos2_cumulant(f: ChaosKernel, m: int) -> float:
    """Cumulant ``kappa_m(I_2(f)) = 2^(m-1) (m-1)! sum_i lambda_i^m``."""
    if f.order != 2:
        raise ValueError("second-chaos cumulants need an order-2 kernel")
    if not 2 <= m <= 6:
        raise ValueError("cumulant order must lie in [2, 6]")
    if m == 2:
        return 2.0 * float(np.sum(f.entries**2))
    lam = f.eigenvalues
    return 2.0 ** (m - 1) * math.factorial(m - 1) * float(np.sum(lam**m))


def chaos2_sample(f: ChaosKernel, count: int, rng: np.random.Generator, chunk: int = 256) -> np.ndarray:
    """Exact samples of ``I_2(f) = sum_i lambda_i (xi_i^2 - 1)``."""
    if f.order != 2:
        raise ValueError("chaos2_sample needs an order-2 kernel")
    lam = f.eigenvalues
    out = np.empty(count)
    for start in range(0, count, chunk):
        k = min(chunk, count - start)
        xi = rng.standard_normal((k, lam.size))
        out[start:start + k] = (xi * xi - 1.0) @ lam
    return out
