# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled lattice kernels.

All kernels work on 3-d views; lower-dimensional lattices are padded with
singleton axes by the caller. Semantics match ``_pykernels`` exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

DEF MAXVARS = 6


cdef inline Py_ssize_t _wrap(Py_ssize_t i, Py_ssize_t n) nogil:
    i = i % n
    if i < 0:
        i += n
    return i


cdef inline double _interp(const double[:, :, ::1] v, double p0, double p1, double p2,
                           double lo0, double lo1, double lo2,
                           double h0, double h1, double h2) nogil:
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1], n2 = v.shape[2]
    cdef double s0 = (p0 - lo0) / h0
    cdef double s1 = (p1 - lo1) / h1
    cdef double s2 = (p2 - lo2) / h2
    cdef double f0 = floor(s0), f1 = floor(s1), f2 = floor(s2)
    cdef double w0 = s0 - f0, w1 = s1 - f1, w2 = s2 - f2
    cdef Py_ssize_t i0 = _wrap(<Py_ssize_t>f0, n0), j0 = _wrap(i0 + 1, n0)
    cdef Py_ssize_t i1 = _wrap(<Py_ssize_t>f1, n1), j1 = _wrap(i1 + 1, n1)
    cdef Py_ssize_t i2 = _wrap(<Py_ssize_t>f2, n2), j2 = _wrap(i2 + 1, n2)
    cdef double a = (1 - w2) * v[i0, i1, i2] + w2 * v[i0, i1, j2]
    cdef double b = (1 - w2) * v[i0, j1, i2] + w2 * v[i0, j1, j2]
    cdef double c = (1 - w2) * v[j0, i1, i2] + w2 * v[j0, i1, j2]
    cdef double d = (1 - w2) * v[j0, j1, i2] + w2 * v[j0, j1, j2]
    return (1 - w0) * ((1 - w1) * a + w1 * b) + w0 * ((1 - w1) * c + w1 * d)


def interp_periodic(const double[:, :, ::1] v, lo, h, const double[:, ::1] pts):
    """Multilinear periodic interpolation of ``v`` at ``pts`` (shape (P, 3))."""
    cdef Py_ssize_t P = pts.shape[0], i
    cdef double lo0 = lo[0], lo1 = lo[1], lo2 = lo[2]
    cdef double h0 = h[0], h1 = h[1], h2 = h[2]
    out = np.empty(P)
    cdef double[::1] o = out
    with nogil:
        for i in range(P):
            o[i] = _interp(v, pts[i, 0], pts[i, 1], pts[i, 2], lo0, lo1, lo2, h0, h1, h2)
    return out


def convolve_group(const double[:, :, ::1] v, lo, h, const double[:, ::1] xs,
                   const double[:, ::1] yinv, const double[::1] weights,
                   const cnp.int64_t[:, ::1] exps, const double[::1] coeffs,
                   const cnp.int64_t[::1] offsets):
    """``out[i] = sum_s weights[s] * v(yinv[s] o xs[i])`` with the law given as tables.

    ``xs`` and ``yinv`` have ``N <= 3`` columns; ``exps`` has ``2N`` columns
    ordered (first factor, second factor).
    """
    cdef Py_ssize_t P = xs.shape[0], S = yinv.shape[0], N = xs.shape[1]
    cdef Py_ssize_t i, s, k, t, j, e
    cdef double lo0 = lo[0], lo1 = lo[1], lo2 = lo[2]
    cdef double h0 = h[0], h1 = h[1], h2 = h[2]
    cdef double var[MAXVARS]
    cdef double p[3]
    cdef double acc, term
    if N > 3:
        raise ValueError("compiled kernels support N <= 3")
    out = np.zeros(P)
    cdef double[::1] o = out
    with nogil:
        for i in range(P):
            acc = 0.0
            for s in range(S):
                for k in range(N):
                    var[k] = yinv[s, k]
                    var[N + k] = xs[i, k]
                p[0] = 0.0
                p[1] = 0.0
                p[2] = 0.0
                for k in range(N):
                    for t in range(offsets[k], offsets[k + 1]):
                        term = coeffs[t]
                        for j in range(2 * N):
                            for e in range(exps[t, j]):
                                term = term * var[j]
                        p[k] += term
                acc += weights[s] * _interp(v, p[0], p[1], p[2], lo0, lo1, lo2, h0, h1, h2)
            o[i] = acc
    return out


cdef Py_ssize_t[:, ::1] _neighbours(Py_ssize_t n):
    """Rows: periodic index of ``i+1``, ``i-1``, ``i+2``, ``i-2``."""
    i = np.arange(n, dtype=np.intp)
    return np.ascontiguousarray(np.stack([(i + 1) % n, (i - 1) % n, (i + 2) % n, (i - 2) % n]))


def apply_field(const double[:, :, ::1] v, const double[:, :, :, ::1] coef,
                active, h, int order):
    """``sum_k coef[k] * D_k v`` with periodic centered differences of order 2 or 4."""
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1], n2 = v.shape[2]
    cdef Py_ssize_t a, b, c
    cdef int k
    cdef int act[3]
    cdef double inv[3]
    cdef double d, acc
    cdef bint four = order != 2
    cdef Py_ssize_t[:, ::1] P0 = _neighbours(n0)
    cdef Py_ssize_t[:, ::1] P1 = _neighbours(n1)
    cdef Py_ssize_t[:, ::1] P2 = _neighbours(n2)
    for k in range(3):
        act[k] = 1 if active[k] else 0
        inv[k] = 1.0 / (2.0 * h[k]) if order == 2 else 1.0 / (12.0 * h[k])
    out = np.empty((n0, n1, n2))
    cdef double[:, :, ::1] o = out
    with nogil:
        for a in range(n0):
            for b in range(n1):
                for c in range(n2):
                    acc = 0.0
                    if act[0]:
                        d = v[P0[0, a], b, c] - v[P0[1, a], b, c]
                        if four:
                            d = 8.0 * d - (v[P0[2, a], b, c] - v[P0[3, a], b, c])
                        acc += coef[0, a, b, c] * d * inv[0]
                    if act[1]:
                        d = v[a, P1[0, b], c] - v[a, P1[1, b], c]
                        if four:
                            d = 8.0 * d - (v[a, P1[2, b], c] - v[a, P1[3, b], c])
                        acc += coef[1, a, b, c] * d * inv[1]
                    if act[2]:
                        d = v[a, b, P2[0, c]] - v[a, b, P2[1, c]]
                        if four:
                            d = 8.0 * d - (v[a, b, P2[2, c]] - v[a, b, P2[3, c]])
                        acc += coef[2, a, b, c] * d * inv[2]
                    o[a, b, c] = acc
    return out
