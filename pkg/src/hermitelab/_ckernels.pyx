# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _hermite(int q, double x) noexcept nogil:
    cdef double h0 = 1.0, h1 = x, h2
    cdef int k
    if q == 0:
        return 1.0
    for k in range(1, q):
        h2 = x * h1 - k * h0
        h0 = h1
        h1 = h2
    return h1


def hermite_eval(int q, const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _hermite(q, x[i])
    return out


def hermite_block_sums(const double[::1] xi, int q, Py_ssize_t m):
    """Sum of He_q over consecutive blocks of length m (trailing remainder dropped)."""
    cdef Py_ssize_t nb = xi.shape[0] // m
    cdef Py_ssize_t b, j, base
    cdef double acc
    out = np.empty(nb, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for b in range(nb):
            acc = 0.0
            base = b * m
            for j in range(m):
                acc += _hermite(q, xi[base + j])
            o[b] = acc
    return out


def linear_recursion(double a, const double[::1] u, double y0=0.0):
    """y[k] = a*y[k-1] + u[k] with y[-1] = y0."""
    cdef Py_ssize_t k, n = u.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    cdef double prev = y0
    with nogil:
        for k in range(n):
            prev = a * prev + u[k]
            y[k] = prev
    return out
