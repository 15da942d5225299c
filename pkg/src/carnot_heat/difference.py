"""Finite differences along group increments, seminorms and Sobolev norms.

Side conventions:

* ``"left"``: ``Delta_h f(x) = f(x o h) - f(x)``. Its derivative along
  ``h = Exp(t X_i)`` is the left-invariant ``X_i``, so it pairs with the
  unadorned seminorm and ``W^{k,2}_X``.
* ``"right"``: ``Delta~_h f(x) = f(h o x) - f(x)``; pairs with ``X_i^R`` and
  the ``R`` seminorm.

Data are extended by zero outside the box. An increment is admissible for
``f`` when every translate of ``supp f`` that the difference touches stays
inside the box (checked by interval arithmetic on the group law).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np

from . import _kernels
from .errors import DomainError, SafeRegionError
from .fields import FieldOperator, apply_word
from .group_core import GroupSpec, exp_generator, hom_norm, inverse, multiply
from .lattice import GridFunction, Lattice, _support_box, product_support_bounds
from .spacetime import SpaceTimeField, st_l2_norm

SIDES = ("left", "right")
SEMINORM_COLUMNS = ("side", "m", "alpha", "value", "argmax_i", "argmax_t", "tmin_flag")
N_T = 40


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def _field_kind(side: str) -> str:
    _check_side(side)
    return side


def power(spec: GroupSpec, h, k: int) -> np.ndarray:
    """``h^k`` by repeated multiplication (``k >= 0``)."""
    out = np.zeros(spec.N)
    for _ in range(k):
        out = multiply(spec, out, h)
    return out


def _as_frames(f):
    """(lattice, stack of frames, rebuild) for a GridFunction or SpaceTimeField."""
    if isinstance(f, GridFunction):
        return f.lattice, f.values[None], lambda arr: GridFunction(f.lattice, arr[0])
    if isinstance(f, SpaceTimeField):
        return f.lattice, f.frames, lambda arr: SpaceTimeField(f.lattice, f.dt, arr)
    raise TypeError(f"expected GridFunction or SpaceTimeField, got {type(f).__name__}")


def _support(lattice: Lattice, stack: np.ndarray):
    agg = GridFunction(lattice, np.max(np.abs(stack), axis=0))
    return _support_box(agg)


def reach_admissible(side: str, spec: GroupSpec, h, m: int, lattice: Lattice, box) -> bool:
    """Whether ``supp o h^-k`` (left) or ``h^-k o supp`` (right), ``k <= m``, stay in the box."""
    _check_side(side)
    if box is None:
        return True
    pad = np.asarray(lattice.h)
    sbox = (box[0] - pad, box[1] + pad)
    half = np.asarray(lattice.box)
    hinv = inverse(spec, np.asarray(h, dtype=float))
    for k in range(1, m + 1):
        g = power(spec, hinv, k)
        gbox = (g, g)
        lo, hi = (product_support_bounds(spec, sbox, gbox) if side == "left"
                  else product_support_bounds(spec, gbox, sbox))
        if np.any(lo < -half) or np.any(hi >= half - pad):
            return False
    return True


def _translate_stack(side: str, spec: GroupSpec, g, lattice: Lattice, stack: np.ndarray) -> np.ndarray:
    """``f(x o g)`` (left) or ``f(g o x)`` (right) for each frame, zero outside the box."""
    g = np.asarray(g, dtype=float)
    pts = lattice.flat_points
    pts = multiply(spec, pts, g) if side == "left" else multiply(spec, g, pts)
    inside = lattice.contains(pts)
    p3 = lattice.pad_points(pts)
    out = np.empty_like(stack)
    for n in range(stack.shape[0]):
        v3 = np.ascontiguousarray(stack[n].reshape(lattice.shape3))
        vals = _kernels.interp_periodic(v3, lattice.lo3, lattice.h3, p3)
        vals[~inside] = 0.0
        out[n] = vals.reshape(lattice.shape)
    return out


def _delta_power_stack(side, spec, h, m, lattice, stack):
    # binomial expansion: every translate is one interpolation of the data
    acc = np.zeros_like(stack)
    for k in range(m + 1):
        c = (-1) ** (m - k) * comb(m, k)
        term = stack if k == 0 else _translate_stack(side, spec, power(spec, h, k), lattice, stack)
        acc += c * term
    return acc


def delta_power(side: str, spec: GroupSpec, h, m: int, f, check_support: bool = True):
    """``Delta_h^m f`` evaluated as ``sum_k (-1)^(m-k) C(m,k) f(x o h^k)`` (or ``h^k o x``).

    Works frame by frame on a SpaceTimeField.
    """
    _check_side(side)
    if m < 1:
        raise DomainError(f"difference order must be >= 1, got {m}")
    lattice, stack, rebuild = _as_frames(f)
    if check_support and not reach_admissible(side, spec, h, m, lattice, _support(lattice, stack)):
        raise SafeRegionError(f"increment {np.asarray(h)} (order {m}) moves the support out of the box")
    return rebuild(_delta_power_stack(side, spec, h, m, lattice, stack))


def delta(side: str, spec: GroupSpec, h, f, check_support: bool = True):
    """``Delta_h f`` (left) or ``Delta~_h f`` (right)."""
    return delta_power(side, spec, h, 1, f, check_support)


# Seminorms ----------------------------------------------------------------------

@dataclass
class SeminormReport:
    side: str
    m: int
    alpha: float
    value: float
    argmax_i: int
    argmax_t: float
    t_grid: list = field(default_factory=list)
    tmin_flag: bool = False
    skipped: list = field(default_factory=list)

    def row(self) -> dict:
        return {"side": self.side, "m": self.m, "alpha": self.alpha, "value": self.value,
                "argmax_i": self.argmax_i, "argmax_t": self.argmax_t, "tmin_flag": self.tmin_flag}

    def to_dict(self) -> dict:
        d = self.row()
        d["t_grid"] = list(self.t_grid)
        d["skipped"] = [list(s) for s in self.skipped]
        return d


def seminorm_rows_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SEMINORM_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def t_grid(lattice: Lattice, n_t: int = N_T, t_min: float | None = None, t_max: float = 1.0) -> np.ndarray:
    """Log-spaced magnitudes in ``[t_min, t_max]``; default ``t_min = 2 max(h)``."""
    if t_min is None:
        t_min = 2.0 * max(lattice.h)
    if n_t < 1 or not 0 < t_min <= t_max:
        raise DomainError(f"empty t grid: n_t={n_t}, t_min={t_min}, t_max={t_max}")
    return np.geomspace(t_min, t_max, n_t)


def seminorm(side: str, spec: GroupSpec, m: int, alpha: float | None, f,
             n_t: int = N_T, t_min: float | None = None, directions=None,
             norm_kind: str = "max") -> SeminormReport:
    """``sup ||Delta_h^m f|| / ||h||^alpha`` over ``h = Exp(t X_i)``, ``0 < ||h|| <= 1``.

    ``alpha=None`` means ``alpha = m``. ``m = 0`` returns the L2 norm. Increments
    whose translates would leave the box are skipped and listed in the report.
    """
    _check_side(side)
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    alpha = float(m if alpha is None else alpha)
    lattice, stack, rebuild = _as_frames(f)
    if m == 0:
        return SeminormReport(side, 0, alpha, st_l2_norm(f), 0, 0.0)
    mags = t_grid(lattice, n_t, t_min)
    dirs = list(directions) if directions is not None else list(range(1, spec.q + 1))
    sbox = _support(lattice, stack)
    best, arg_i, arg_t = 0.0, 0, 0.0
    skipped = []
    for i in dirs:
        for sign in (1.0, -1.0):
            for t in mags:
                t = sign * t
                h = exp_generator(spec, i, t)
                nh = float(hom_norm(spec, h, norm_kind))
                if not 0 < nh <= 1:
                    skipped.append((i, t, "norm"))
                    continue
                if not reach_admissible(side, spec, h, m, lattice, sbox):
                    skipped.append((i, t, "support"))
                    continue
                d = rebuild(_delta_power_stack(side, spec, h, m, lattice, stack))
                val = st_l2_norm(d) / nh ** alpha
                if val > best:
                    best, arg_i, arg_t = val, i, t
    if len(skipped) == 2 * len(dirs) * len(mags):
        raise SafeRegionError("no admissible increment in the t grid")
    flag = bool(best > 0 and np.isclose(abs(arg_t), mags[0]))
    return SeminormReport(side, m, alpha, best, arg_i, arg_t, [float(t) for t in mags], flag,
                          [(i, float(t), why) for i, t, why in skipped])


# Sobolev norms ------------------------------------------------------------------

def _apply_word_st(spec, word, u, kind, order):
    if isinstance(u, GridFunction):
        return apply_word(spec, word, u, kind, order)
    return u.map(lambda g: apply_word(spec, word, g, kind, order))


def sobolev_terms(side: str, spec: GroupSpec, k: int, u, order: int = 2) -> dict:
    """``||X_{i1} ... X_{ij} u||`` for every word of length ``<= k``, keyed by word."""
    kind = _field_kind(side)
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    out = {(): st_l2_norm(u)}
    for j in range(1, k + 1):
        for word in product(range(1, spec.q + 1), repeat=j):
            out[word] = st_l2_norm(_apply_word_st(spec, word, u, kind, order))
    return out


def sobolev_norm(side: str, spec: GroupSpec, k: int, u, order: int = 2) -> float:
    """Sum of L2 norms of ``u`` and all its field derivatives of order ``<= k``."""
    return float(sum(sobolev_terms(side, spec, k, u, order).values()))


def horizontal_gradient_norm(side: str, spec: GroupSpec, u, order: int = 2) -> float:
    """``(sum_i ||X_i u||^2)^(1/2)`` with the fields matching ``side``."""
    kind = _field_kind(side)
    tot = 0.0
    for i in range(1, spec.q + 1):
        tot += st_l2_norm(_apply_word_st(spec, (i,), u, kind, order)) ** 2
    return float(np.sqrt(tot))


@dataclass
class EquivalenceRatios:
    seminorm_ratio: float
    gradient_ratio: float
    degenerate: bool = False


def _ratio(a: float, b: float):
    if b == 0:
        return 0.0, True
    return a / b, False


def equivalence_ratio(side: str, spec: GroupSpec, m: int, u, **kw) -> EquivalenceRatios:
    """``(sum_{k<=m} |u|_k / ||u||_{W^{m,2}}, ||grad u|| / |u|_1)``; ``0/0`` gives 0 and a flag."""
    semi = [seminorm(side, spec, k, None, u, **kw).value for k in range(max(m, 1) + 1)]
    r1, d1 = _ratio(sum(semi[: m + 1]), sobolev_norm(side, spec, m, u))
    r2, d2 = _ratio(horizontal_gradient_norm(side, spec, u), semi[1])
    return EquivalenceRatios(r1, r2, d1 or d2)


def marchaud_ratio(spec: GroupSpec, u, m: int = 2, eps: float = 0.5, side: str = "right", **kw) -> float:
    """``|u|_1 / (|u|_{m,1+eps} + ||u||)`` for the given side."""
    num = seminorm(side, spec, 1, None, u, **kw).value
    den = seminorm(side, spec, m, 1.0 + eps, u, **kw).value + st_l2_norm(u)
    return _ratio(num, den)[0]


# Gain exponent --------------------------------------------------------------------

@dataclass
class GainFit:
    slope: float
    r2: float
    norms: list
    values: list
    direction: int


def dilation_increments(spec: GroupSpec, k: int, radii) -> np.ndarray:
    """``D_r e_k``: increments of homogeneous (max) norm ``r`` along coordinate ``k``."""
    w = np.asarray(spec.weights, dtype=float)
    out = np.zeros((len(radii), spec.N))
    out[:, k] = np.asarray(radii, dtype=float) ** w[k]
    return out


def loglog_fit(x, y):
    """OLS slope and R^2 of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def gain_exponent(spec: GroupSpec, u, radii, side: str = "right") -> list:
    """Log-log slope of ``||Delta_h u||`` against ``||h||`` for ``h = D_r e_k``, per coordinate ``k``."""
    fits = []
    for k in range(spec.N):
        hs = dilation_increments(spec, k, radii)
        vals = [st_l2_norm(delta(side, spec, h, u)) for h in hs]
        norms = [float(hom_norm(spec, h, "max")) for h in hs]
        slope, r2 = loglog_fit(norms, vals)
        fits.append(GainFit(slope, r2, norms, [float(v) for v in vals], k + 1))
    return fits
