"""Pure-NumPy implementations of the lattice kernels (fallback backend)."""

import numpy as np


def _corners(v, lo, h, pts):
    n = v.shape
    idx, wts = [], []
    for k in range(3):
        s = (pts[:, k] - lo[k]) / h[k]
        f = np.floor(s)
        i = np.mod(f.astype(np.int64), n[k])
        idx.append((i, np.mod(i + 1, n[k])))
        wts.append(s - f)
    return idx, wts


def interp_periodic(v, lo, h, pts):
    """Multilinear periodic interpolation of ``v`` at ``pts`` (shape (P, 3))."""
    idx, (w0, w1, w2) = _corners(v, lo, h, pts)
    (i0, j0), (i1, j1), (i2, j2) = idx
    a = (1 - w2) * v[i0, i1, i2] + w2 * v[i0, i1, j2]
    b = (1 - w2) * v[i0, j1, i2] + w2 * v[i0, j1, j2]
    c = (1 - w2) * v[j0, i1, i2] + w2 * v[j0, i1, j2]
    d = (1 - w2) * v[j0, j1, i2] + w2 * v[j0, j1, j2]
    return (1 - w0) * ((1 - w1) * a + w1 * b) + w0 * ((1 - w1) * c + w1 * d)


def _eval_tables(var, exps, coeffs, offsets, nout):
    out = []
    for k in range(nout):
        acc = np.zeros(var.shape[0])
        for t in range(offsets[k], offsets[k + 1]):
            term = np.full(var.shape[0], coeffs[t])
            for j, e in enumerate(exps[t]):
                for _ in range(e):
                    term = term * var[:, j]
            acc = acc + term
        out.append(acc)
    return out


def convolve_group(v, lo, h, xs, yinv, weights, exps, coeffs, offsets):
    """``out[i] = sum_s weights[s] * v(yinv[s] o xs[i])`` with the law given as tables."""
    P, N = xs.shape
    if N > 3:
        raise ValueError("kernels support N <= 3")
    out = np.zeros(P)
    pts = np.zeros((P, 3))
    for s in range(yinv.shape[0]):
        var = np.concatenate([np.broadcast_to(yinv[s], (P, N)), xs], axis=1)
        for k, col in enumerate(_eval_tables(var, exps, coeffs, offsets, N)):
            pts[:, k] = col
        out += weights[s] * interp_periodic(v, lo, h, pts)
    return out


def apply_field(v, coef, active, h, order):
    """``sum_k coef[k] * D_k v`` with periodic centered differences of order 2 or 4."""
    out = np.zeros_like(v)
    for k in range(3):
        if not active[k]:
            continue
        if order == 2:
            d = (np.roll(v, -1, axis=k) - np.roll(v, 1, axis=k)) / (2.0 * h[k])
        else:
            d = (8.0 * (np.roll(v, -1, axis=k) - np.roll(v, 1, axis=k))
                 - (np.roll(v, -2, axis=k) - np.roll(v, 2, axis=k))) / (12.0 * h[k])
        out += coef[k] * d
    return out
