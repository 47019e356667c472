"""Galerkin discretisation of power kernels ``(s - xi)_+^gamma``.

Both the direct Hermite simulator and the Rosenblatt reference kernel are
built from the family ``phi_s(xi) = (s - xi)_+^gamma``, ``-1 < gamma < -1/2``,
integrated over ``s`` in ``[0, t]``.  ``xi`` is discretised into cells and each
``phi_s`` is projected onto the orthonormal basis ``1_cell / sqrt(|cell|)``;
the projection coefficients have the closed form

    g_j(s) = ((s - a_j)_+^p - (s - b_j)_+^p) / p,   p = gamma + 1,

divided by ``sqrt(b_j - a_j)``.  The ``s`` integral uses Gauss-Legendre rules
on panels bounded by the cell edges inside ``[0, t]`` with the substitution
``s = left + width * v^3`` that smooths the ``(s - left)^p`` onsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_GL_NODES = 6


@dataclass(frozen=True)
class PowerBasis:
    gamma: float
    edges: np.ndarray  # cell edges, increasing, edges[-1] == horizon
    s_nodes: np.ndarray
    s_weights: np.ndarray
    s_panel: np.ndarray  # index of the inner cell each node belongs to
    inner_start: int  # index of the first cell with left edge >= 0
    phi: np.ndarray  # (n_s, n_cells) projected coefficients

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def n_cells(self) -> int:
        return self.edges.size - 1


def graded_edges(horizon: float, n_inner: int, lower: float, n_flat: int | None = None,
                 ratio: float = 1.15) -> np.ndarray:
    """Cell edges on ``[-lower, horizon]``.

    ``n_inner`` uniform cells cover ``[0, horizon]``; ``n_flat`` more of the
    same width continue left of zero, then widths grow geometrically by
    ``ratio`` until ``-lower`` is reached.
    """
    h = horizon / n_inner
    if n_flat is None:
        n_flat = max(4, n_inner // 8)
    left = [0.0]
    x = 0.0
    for _ in range(n_flat):
        x -= h
        left.append(x)
        if -x >= lower:
            break
    w = h
    while -x < lower:
        w *= ratio
        x = max(x - w, -lower)
        left.append(x)
    inner = np.linspace(0.0, horizon, n_inner + 1)
    return np.concatenate([np.array(left[:0:-1]), inner])


def cells_for_total(horizon: float, n_total: int, lower: float, ratio: float = 1.15) -> np.ndarray:
    """Edges with exactly ``n_total`` cells, splitting inner/outer automatically."""
    lo, hi, n_inner = 8, n_total, None
    while lo <= hi:
        mid = (lo + hi) // 2
        if graded_edges(horizon, mid, lower, ratio=ratio).size - 1 <= n_total:
            n_inner, lo = mid, mid + 1
        else:
            hi = mid - 1
    if n_inner is None:
        raise ValueError(f"n={n_total} is too small for the requested truncation")
    # extra flat cells add one cell at a time (or none), so the count is hit exactly
    n_flat = max(4, n_inner // 8)
    edges = graded_edges(horizon, n_inner, lower, n_flat=n_flat, ratio=ratio)
    while edges.size - 1 < n_total:
        n_flat += 1
        edges = graded_edges(horizon, n_inner, lower, n_flat=n_flat, ratio=ratio)
    return edges


def _projection(gamma: float, edges: np.ndarray, s: np.ndarray) -> np.ndarray:
    p = gamma + 1.0
    a = edges[:-1][None, :]
    b = edges[1:][None, :]
    ss = s[:, None]
    g = (np.clip(ss - a, 0.0, None) ** p - np.clip(ss - b, 0.0, None) ** p) / p
    return g / np.sqrt(b - a)


def build_basis(gamma: float, edges: np.ndarray) -> PowerBasis:
    if not -1.0 < gamma < -0.5:
        raise ValueError("gamma must lie in (-1, -1/2)")
    edges = np.asarray(edges, dtype=np.float64)
    inner_start = int(np.searchsorted(edges, 0.0))
    inner = edges[inner_start:]
    v, wv = np.polynomial.legendre.leggauss(_GL_NODES)
    v = 0.5 * (v + 1.0)
    wv = 0.5 * wv
    width = np.diff(inner)
    s_nodes = (inner[:-1, None] + width[:, None] * v[None, :] ** 3).ravel()
    s_weights = (width[:, None] * 3.0 * v[None, :] ** 2 * wv[None, :]).ravel()
    s_panel = np.repeat(np.arange(width.size), _GL_NODES)
    phi = _projection(gamma, edges, s_nodes)
    return PowerBasis(gamma=gamma, edges=edges, s_nodes=s_nodes, s_weights=s_weights,
                      s_panel=s_panel, inner_start=inner_start, phi=phi)


def tail_bound(q: int, H0: float, c2: float, t: float, lower: float) -> float:
    """Upper bound on the squared L2 norm of the kernel mass with some ``xi < -lower``.

    For ``xi_1 < -L`` one has ``(s - xi_1)^gamma <= |xi_1|^gamma``; integrating
    the remaining coordinates with the beta identity and summing over the
    ``q`` coordinates gives

        q c^2 L^(2 H0 - 2) / (2 - 2 H0) * B^(q-1) * 2 t^(a+2) / ((a+1)(a+2))

    with ``a = (q - 1)(2 H0 - 2)`` and ``B = beta(H0 - 1/2, 2 - 2 H0)``.
    """
    from scipy.special import beta

    a = (q - 1) * (2.0 * H0 - 2.0)
    B = beta(H0 - 0.5, 2.0 - 2.0 * H0)
    inner = B ** (q - 1) * 2.0 * t ** (a + 2.0) / ((a + 1.0) * (a + 2.0))
    return q * c2 * lower ** (2.0 * H0 - 2.0) / (2.0 - 2.0 * H0) * inner


def lower_for_tail(q: int, H0: float, c2: float, t: float, tol: float) -> float:
    """Smallest ``L`` for which :func:`tail_bound` is at most ``tol``."""
    unit = tail_bound(q, H0, c2, t, 1.0)
    return (tol / unit) ** (1.0 / (2.0 * H0 - 2.0)) if unit > tol else 1.0


def log10_span(lower: float, horizon: float) -> float:
    return math.log10(max(lower, horizon) / horizon)
