"""Invariant vector fields on lattices, commutators and Hörmander rank.

A field ``X = sum_k b_k(x) d_k`` is applied to grid data by replacing each
``d_k`` with a periodic centered difference (order 2 or 4). Second-order
operators are always compositions of two first-order applications: ``X_i X_j f``
means ``X_i`` applied to ``X_j f``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, StencilError, UnsupportedOperation
from .group_core import GroupSpec
from .lattice import GridFunction, Lattice, inner, l2_norm
from .polynomial import Polynomial

STENCIL_WIDTH = {2: 3, 4: 5}
RANK_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class FieldOperator:
    spec: GroupSpec
    kind: str = "left"
    index: int = 1
    order: int = 2

    def __post_init__(self):
        if self.kind not in ("left", "right"):
            raise ValueError(f"kind must be 'left' or 'right', got {self.kind!r}")
        if not 1 <= self.index <= self.spec.q:
            raise DomainError(f"generator index {self.index} outside 1..{self.spec.q}")
        if self.order not in STENCIL_WIDTH:
            raise ValueError(f"stencil order must be 2 or 4, got {self.order}")

    @property
    def coefficients(self) -> tuple:
        return self.spec.fields(self.kind)[self.index - 1]

    def __call__(self, f: GridFunction) -> GridFunction:
        return apply_field(self, f)


@lru_cache(maxsize=256)
def field_arrays(spec: GroupSpec, kind: str, i: int, lattice: Lattice):
    """Coefficient arrays of ``X_i`` on the lattice, padded to 3-d, and active-axis flags."""
    polys = spec.fields(kind)[i - 1]
    coef = np.zeros((3,) + lattice.shape3)
    active = [False, False, False]
    for k, p in enumerate(polys):
        if p.is_zero():
            continue
        active[k] = True
        coef[k] = np.broadcast_to(p(lattice.points), lattice.shape).reshape(lattice.shape3)
    coef.flags.writeable = False
    return coef, tuple(active)


def _check_stencil(lattice: Lattice, active, order: int) -> None:
    width = STENCIL_WIDTH[order]
    for k, on in enumerate(active[: lattice.N]):
        if on and lattice.n[k] < width:
            raise StencilError(f"axis {k} has {lattice.n[k]} points; order-{order} stencil needs {width}")


def apply_field_values(spec: GroupSpec, kind: str, i: int, lattice: Lattice,
                       values3: np.ndarray, order: int = 2) -> np.ndarray:
    """Raw-array form of :func:`apply_field` on 3-d padded values."""
    coef, active = field_arrays(spec, kind, i, lattice)
    _check_stencil(lattice, active, order)
    return _kernels.apply_field(values3, coef, active, lattice.h3, order)


def apply_field(op: FieldOperator, f: GridFunction) -> GridFunction:
    """``X_i f`` sampled on the lattice of ``f``."""
    lat = f.lattice
    out = apply_field_values(op.spec, op.kind, op.index, lat, f.values3(), op.order)
    return GridFunction(lat, out.reshape(lat.shape))


def apply_second_order(spec: GroupSpec, i: int, j: int, f: GridFunction,
                       kind: str = "left", order: int = 2) -> GridFunction:
    """``X_i X_j f``: apply ``X_j`` first, then ``X_i``."""
    inner_ = apply_field(FieldOperator(spec, kind, j, order), f)
    return apply_field(FieldOperator(spec, kind, i, order), inner_)


def apply_word(spec: GroupSpec, word: Sequence[int], f: GridFunction,
               kind: str = "left", order: int = 2) -> GridFunction:
    """``X_{w_1} X_{w_2} ... X_{w_k} f`` (rightmost applied first)."""
    out = f
    for i in reversed(tuple(word)):
        out = apply_field(FieldOperator(spec, kind, i, order), out)
    return out


def partial_values(lattice: Lattice, values3: np.ndarray, k: int, order: int = 2) -> np.ndarray:
    """Cartesian ``d_k`` by the same periodic stencil."""
    coef = np.zeros((3,) + lattice.shape3)
    coef[k] = 1.0
    active = tuple(j == k for j in range(3))
    _check_stencil(lattice, active, order)
    return _kernels.apply_field(values3, coef, active, lattice.h3, order)


def apply_operator_values(spec: GroupSpec, a: np.ndarray, lattice: Lattice,
                          values3: np.ndarray, kind: str = "left", order: int = 2) -> np.ndarray:
    """``sum_ij a_ij X_i X_j`` on raw 3-d values, using ``2q`` field applications."""
    a = np.asarray(a, dtype=float)
    q = spec.q
    grads = [apply_field_values(spec, kind, j + 1, lattice, values3, order) for j in range(q)]
    out = np.zeros_like(values3)
    for i in range(q):
        w = sum(a[i, j] * grads[j] for j in range(q) if a[i, j] != 0.0)
        if isinstance(w, np.ndarray):
            out += apply_field_values(spec, kind, i + 1, lattice, np.ascontiguousarray(w), order)
    return out


# Polynomial vector fields ----------------------------------------------------

def lie_bracket(X: Sequence[Polynomial], Y: Sequence[Polynomial]) -> tuple:
    """Coefficients of ``[X, Y] = XY - YX``: ``sum_l (X_l d_l Y_k - Y_l d_l X_k)``."""
    N = len(X)
    out = []
    for k in range(N):
        acc = Polynomial.zero(X[0].nvars)
        for l in range(N):
            acc = acc + X[l] * Y[k].diff(l) - Y[l] * X[k].diff(l)
        out.append(acc)
    return tuple(out)


def bracket(spec: GroupSpec, a: tuple, b: tuple) -> tuple:
    """``[X_a, X_b]`` for ``a = (kind, i)``, ``b = (kind, j)`` of the same kind."""
    (ka, ia), (kb, ib) = a, b
    if ka != kb:
        raise UnsupportedOperation("brackets of mixed left/right fields are not supported")
    fa, fb = spec.fields(ka), spec.fields(kb)
    for i in (ia, ib):
        if not 1 <= i <= spec.q:
            raise DomainError(f"generator index {i} outside 1..{spec.q}")
    return lie_bracket(fa[ia - 1], fb[ib - 1])


def is_zero_field(X: Sequence[Polynomial], atol: float = 0.0) -> bool:
    return all(all(abs(c) <= atol for c in p.terms.values()) for p in X)


def iterated_brackets(spec: GroupSpec, depth: int, kind: str = "left") -> list:
    """All fields ``[X_i1, [X_i2, ... X_ik]]`` with ``k <= depth``."""
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    gens = list(spec.fields(kind))
    levels = [gens]
    for _ in range(depth - 1):
        nxt = []
        for g, Y in product(gens, levels[-1]):
            Z = lie_bracket(g, Y)
            if not is_zero_field(Z):
                nxt.append(Z)
        levels.append(nxt)
    return [X for lvl in levels for X in lvl]


def hormander_rank(spec: GroupSpec, depth: int, point, kind: str = "left") -> int:
    """Dimension of the span at ``point`` of generators and brackets up to ``depth``."""
    point = np.asarray(point, dtype=float)
    rows = [np.array([p(point) for p in X]) for X in iterated_brackets(spec, depth, kind)]
    if not rows:
        return 0
    sv = np.linalg.svd(np.vstack(rows), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def apply_polynomial_field(X: Sequence[Polynomial], f: GridFunction, order: int = 2) -> GridFunction:
    """Apply an arbitrary polynomial field (e.g. a bracket) with the same stencils."""
    lat = f.lattice
    vals = f.values3()
    out = np.zeros(lat.shape3)
    for k, p in enumerate(X):
        if p.is_zero():
            continue
        c = np.broadcast_to(p(lat.points), lat.shape).reshape(lat.shape3)
        out += c * partial_values(lat, vals, k, order)
    return GridFunction(lat, out.reshape(lat.shape))


@dataclass(frozen=True, eq=False)
class GaussPoly:
    """``P(x) exp(E(x))`` with polynomial ``P`` and quadratic ``E``; closed under polynomial fields."""

    P: Polynomial
    E: Polynomial

    def __call__(self, pts):
        return self.P(pts) * np.exp(self.E(pts))

    def apply(self, X: Sequence[Polynomial]) -> "GaussPoly":
        XP = Polynomial.zero(self.P.nvars)
        XE = Polynomial.zero(self.P.nvars)
        for k, b in enumerate(X):
            XP = XP + b * self.P.diff(k)
            XE = XE + b * self.E.diff(k)
        return GaussPoly(XP + self.P * XE, self.E)


# Residual checks -----------------------------------------------------------

def commutation_check(spec: GroupSpec, f: GridFunction, iL: int, iR: int, order: int = 2) -> float:
    """``|| X_iL(X_iR^R f) - X_iR^R(X_iL f) ||_L2`` on the lattice."""
    XL = FieldOperator(spec, "left", iL, order)
    XR = FieldOperator(spec, "right", iR, order)
    return l2_norm(XL(XR(f)) - XR(XL(f)))


def integration_by_parts_residual(spec: GroupSpec, f: GridFunction, g: GridFunction, i: int,
                                  kind: str = "left", order: int = 2,
                                  exact_Xf: GridFunction | None = None) -> float:
    """``| int f X_i g + int (X_i f) g |`` by lattice quadrature.

    Both derivatives by stencil is a discrete identity (centered differences
    are skew on the periodic lattice and ``b_ik`` never depends on ``x_k``), so
    the residual is rounding-level. Passing the exact ``X_i f`` in
    ``exact_Xf`` pits the stencil against the continuum identity instead; that
    residual decays at the stencil order.
    """
    X = FieldOperator(spec, kind, i, order)
    Xf = exact_Xf if exact_Xf is not None else X(f)
    return abs(inner(f, X(g)) + inner(Xf, g))
