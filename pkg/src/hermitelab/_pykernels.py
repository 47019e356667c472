"""numpy/scipy fallback for the compiled inner loops in ``_ckernels``."""

import numpy as np
from scipy import signal


def hermite_eval(q, x):
    x = np.asarray(x, dtype=np.float64)
    if q == 0:
        return np.ones_like(x)
    h0 = np.ones_like(x)
    h1 = x.copy()
    for k in range(1, q):
        h0, h1 = h1, x * h1 - k * h0
    return h1


def hermite_block_sums(xi, q, m):
    xi = np.asarray(xi, dtype=np.float64)
    nb = xi.shape[0] // m
    return hermite_eval(q, xi[: nb * m]).reshape(nb, m).sum(axis=1)


def linear_recursion(a, u, y0=0.0):
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0:
        return u.copy()
    y, _ = signal.lfilter([1.0], [1.0, -a], u, zi=[a * y0])
    return y
