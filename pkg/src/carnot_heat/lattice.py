"""Periodic lattices, grid functions, quadrature and group convolution.

The group ``R^N`` is replaced by a periodic box ``prod_k [-L_k, L_k)``. All
estimates of interest are local, so data are kept supported well inside the
box; operations that would let supported data wrap around the box raise
instead of aliasing silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import comb
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels
from .errors import AliasingError, DimensionError, DomainError, ResolutionError
from .group_core import GroupSpec, dilate, inverse, multiply, smooth_gauge_power
from .polynomial import Polynomial, stack_tables

MIN_POINTS = 8
INTERPOLATION = "multilinear"
INTERPOLATION_ORDER = 2


@dataclass(frozen=True)
class Lattice:
    """Uniform periodic lattice on ``prod_k [-box_k, box_k)`` with ``n_k`` points per axis."""

    box: tuple
    n: tuple

    def __post_init__(self):
        box = tuple(float(b) for b in np.atleast_1d(self.box))
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        if len(n) == 1 and len(box) > 1:
            n = n * len(box)
        if len(box) == 1 and len(n) > 1:
            box = box * len(n)
        if len(box) != len(n):
            raise DimensionError(f"box {box} and n {n} disagree in dimension")
        if len(n) > 3:
            raise DimensionError("lattices are limited to N <= 3")
        if any(k < MIN_POINTS for k in n):
            raise DomainError(f"need at least {MIN_POINTS} points per axis, got {n}")
        if any(b <= 0 for b in box):
            raise DomainError(f"box half-widths must be positive, got {box}")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "n", n)

    @property
    def N(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple:
        return tuple(2.0 * b / k for b, k in zip(self.box, self.n))

    @property
    def lo(self) -> tuple:
        return tuple(-b for b in self.box)

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod([2.0 * b for b in self.box]))

    @cached_property
    def axes(self) -> tuple:
        return tuple(lo + h * np.arange(n) for lo, h, n in zip(self.lo, self.h, self.n))

    @cached_property
    def points(self) -> np.ndarray:
        """Coordinates of all lattice points, shape ``(*n, N)``."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack(grids, axis=-1)
        pts.flags.writeable = False
        return pts

    @cached_property
    def flat_points(self) -> np.ndarray:
        pts = np.ascontiguousarray(self.points.reshape(-1, self.N))
        pts.flags.writeable = False
        return pts

    # 3-d padding used by the kernels
    @property
    def shape3(self) -> tuple:
        return tuple(self.n) + (1,) * (3 - self.N)

    @property
    def lo3(self) -> tuple:
        return tuple(self.lo) + (0.0,) * (3 - self.N)

    @property
    def h3(self) -> tuple:
        return tuple(self.h) + (1.0,) * (3 - self.N)

    def pad_points(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.N)
        if self.N == 3:
            return np.ascontiguousarray(pts)
        out = np.zeros((pts.shape[0], 3))
        out[:, : self.N] = pts
        return out

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Whether points lie inside the fundamental box (no wrap needed)."""
        pts = np.asarray(pts, dtype=float)
        lo = np.asarray(self.lo)
        return np.all((pts >= lo) & (pts < -lo), axis=-1)

    def refine(self, factor: float) -> "Lattice":
        return Lattice(self.box, tuple(int(round(k * factor)) for k in self.n))

    def to_dict(self) -> dict:
        return {"box": list(self.box), "n": list(self.n)}


class GridFunction:
    """Real values sampled on a :class:`Lattice`; immutable after construction."""

    __slots__ = ("lattice", "values")

    def __init__(self, lattice: Lattice, values):
        values = np.array(values, dtype=float, copy=True)
        if values.shape != lattice.shape:
            raise DimensionError(f"values of shape {values.shape} do not match lattice {lattice.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid function has non-finite values")
        values.flags.writeable = False
        self.lattice = lattice
        self.values = values

    @classmethod
    def from_callable(cls, lattice: Lattice, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(lattice, np.broadcast_to(fn(lattice.points), lattice.shape))

    @classmethod
    def zeros(cls, lattice: Lattice) -> "GridFunction":
        return cls(lattice, np.zeros(lattice.shape))

    @classmethod
    def constant(cls, lattice: Lattice, c: float) -> "GridFunction":
        return cls(lattice, np.full(lattice.shape, float(c)))

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.lattice != self.lattice:
                raise DimensionError("grid functions live on different lattices")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.lattice, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.lattice, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.lattice, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.lattice, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.lattice, self.values / c)

    def __neg__(self):
        return GridFunction(self.lattice, -self.values)

    def __repr__(self):
        return f"GridFunction(n={self.lattice.n}, box={self.lattice.box})"

    def values3(self) -> np.ndarray:
        return np.ascontiguousarray(self.values.reshape(self.lattice.shape3))

    def sample(self, pts) -> np.ndarray:
        """Periodic multilinear interpolation at arbitrary points ``(..., N)``."""
        pts = np.asarray(pts, dtype=float)
        lead = pts.shape[:-1]
        out = _kernels.interp_periodic(self.values3(), self.lattice.lo3, self.lattice.h3,
                                       self.lattice.pad_points(pts))
        return out.reshape(lead)

    def support_mask(self, rel_tol: float = 1e-12) -> np.ndarray:
        scale = np.max(np.abs(self.values))
        if scale == 0:
            return np.zeros(self.lattice.shape, dtype=bool)
        return np.abs(self.values) > rel_tol * scale


def integrate(f: GridFunction) -> float:
    """Periodic rectangle rule: ``sum(values) * prod(h)``."""
    return float(np.sum(f.values) * f.lattice.cell_volume)


def lp_norm(f: GridFunction, p: float = 2.0) -> float:
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise DomainError(f"need p >= 1, got {p}")
    return float((np.sum(np.abs(f.values) ** p) * f.lattice.cell_volume) ** (1.0 / p))


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(np.sum(f.values ** 2) * f.lattice.cell_volume))


def inner(f: GridFunction, g: GridFunction) -> float:
    return float(np.sum(f.values * f._other(g)) * f.lattice.cell_volume)


# Translations ---------------------------------------------------------------

def left_translate(spec: GroupSpec, f: GridFunction, y) -> GridFunction:
    """``(L_y f)(x) = f(y o x)`` by interpolation."""
    pts = multiply(spec, np.asarray(y, dtype=float), f.lattice.flat_points)
    return GridFunction(f.lattice, f.sample(pts).reshape(f.lattice.shape))


def right_translate(spec: GroupSpec, f: GridFunction, y) -> GridFunction:
    """``f(x o y)`` by interpolation."""
    pts = multiply(spec, f.lattice.flat_points, np.asarray(y, dtype=float))
    return GridFunction(f.lattice, f.sample(pts).reshape(f.lattice.shape))


# Cutoffs ----------------------------------------------------------------------

def smoothstep(x, order: int = 4) -> np.ndarray:
    """Polynomial step of class ``C^order``: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    acc = np.zeros_like(x)
    for k in range(order + 1):
        acc = acc + comb(order + k, k) * comb(2 * order + 1, order - k) * (-x) ** k
    return np.clip(x ** (order + 1) * acc, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class CutoffFunction:
    """Smooth cutoff: 1 on ``{||c^-1 o x|| <= r0}``, 0 on ``{||c^-1 o x|| >= r1}``.

    The gauge is the smooth homogeneous norm, so the profile is smooth across
    the transition shell.
    """

    spec: GroupSpec
    r0: float
    r1: float
    center: tuple = None
    order: int = 4

    def __post_init__(self):
        if not 0 < self.r0 < self.r1:
            raise DomainError(f"need 0 < r0 < r1, got {self.r0}, {self.r1}")
        c = np.zeros(self.spec.N) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", tuple(c))

    def __call__(self, pts) -> np.ndarray:
        y = multiply(self.spec, inverse(self.spec, np.asarray(self.center)), pts)
        rho, p = smooth_gauge_power(self.spec, y)
        r = rho ** (1.0 / p)
        return 1.0 - smoothstep((r - self.r0) / (self.r1 - self.r0), self.order)

    def on(self, lattice: Lattice) -> GridFunction:
        return GridFunction(lattice, self(lattice.points))

    def to_dict(self) -> dict:
        return {"r0": self.r0, "r1": self.r1, "center": list(self.center), "order": self.order,
                "gauge": "smooth"}


def precedes(z0: GridFunction, z1: GridFunction) -> bool:
    """``z0 < z1`` on the lattice: ``0 <= z0 <= z1 <= 1`` and ``z1 = 1`` where ``z0 > 0``."""
    a, b = z0.values, z1.values
    return bool(
        np.all(a >= 0) and np.all(b <= 1) and np.all(a <= b + 1e-15)
        and np.max(a * (1.0 - b)) == 0.0
    )


# Convolution ------------------------------------------------------------------

def _support_box(f: GridFunction, rel_tol: float = 1e-12):
    mask = f.support_mask(rel_tol)
    if not mask.any():
        return None
    pts = f.lattice.points[mask]
    return pts.min(axis=0), pts.max(axis=0)


def _interval_pow(lo, hi, e):
    if e == 0:
        return 1.0, 1.0
    cands = [lo ** e, hi ** e]
    if lo < 0 < hi and e % 2 == 0:
        cands.append(0.0)
    return min(cands), max(cands)


def _interval_poly(poly, lows, highs):
    """Rigorous enclosure of ``poly`` over the box ``prod [lows, highs]``."""
    total_lo = total_hi = 0.0
    for exps, c in poly.terms.items():
        tlo, thi = 1.0, 1.0
        for k, e in enumerate(exps):
            plo, phi = _interval_pow(lows[k], highs[k], e)
            prods = [tlo * plo, tlo * phi, thi * plo, thi * phi]
            tlo, thi = min(prods), max(prods)
        if c >= 0:
            total_lo += c * tlo
            total_hi += c * thi
        else:
            total_lo += c * thi
            total_hi += c * tlo
    return total_lo, total_hi


def product_support_bounds(spec: GroupSpec, box_a, box_b):
    """Enclosure of ``{a o b}`` for ``a``, ``b`` in coordinate boxes."""
    lows = np.concatenate([box_a[0], box_b[0]])
    highs = np.concatenate([box_a[1], box_b[1]])
    bounds = [_interval_poly(p, lows, highs) for p in spec.law]
    return np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds])


def check_no_aliasing(spec: GroupSpec, phi: GridFunction, u: GridFunction) -> None:
    """Raise unless ``supp(phi) o supp(u)`` fits strictly inside the box."""
    bp, bu = _support_box(phi), _support_box(u)
    if bp is None or bu is None:
        return
    h = np.asarray(u.lattice.h)
    lo, hi = product_support_bounds(spec, (bp[0] - h, bp[1] + h), (bu[0] - h, bu[1] + h))
    box = np.asarray(u.lattice.box)
    if np.any(lo < -box) or np.any(hi >= box):
        raise AliasingError(
            f"convolution support [{lo}, {hi}] leaves the periodic box +-{box}; "
            "shrink the kernel or the data support"
        )


CONVOLVE_METHODS = ("auto", "interp", "fourier")


def group_convolve(spec: GroupSpec, phi: GridFunction, u: GridFunction,
                   check_support: bool = True, method: str = "auto") -> GridFunction:
    """``(phi * u)(x) = int phi(y) u(y^-1 o x) dy`` by lattice quadrature in ``y``.

    ``method="interp"`` reads off-lattice values of ``u`` by periodic
    multilinear interpolation (any law). ``method="fourier"`` needs a law that
    is additive in every coordinate but the last; kernel nodes then shift the
    first coordinates by whole cells and the last coordinate is shifted exactly
    in Fourier space. ``"auto"`` picks ``"fourier"`` when the law allows it.
    """
    if phi.lattice != u.lattice:
        raise DimensionError("kernel and data must share a lattice")
    lat = u.lattice
    if lat.N != spec.N:
        raise DimensionError(f"lattice dimension {lat.N} != group dimension {spec.N}")
    if method not in CONVOLVE_METHODS:
        raise ValueError(f"method must be one of {CONVOLVE_METHODS}, got {method!r}")
    if check_support:
        check_no_aliasing(spec, phi, u)
    if method == "auto":
        method = "fourier" if fourier_applicable(spec, lat) else "interp"
    if method == "fourier":
        return GridFunction(lat, fourier_convolve_stack(spec, phi, u.values[None])[0])
    mask = phi.values != 0.0
    nodes = lat.points[mask]
    weights = np.ascontiguousarray(phi.values[mask] * lat.cell_volume)
    return _convolve_nodes(spec, nodes, weights, u)


def _convolve_nodes(spec, nodes, weights, u: GridFunction) -> GridFunction:
    lat = u.lattice
    yinv = np.ascontiguousarray(inverse(spec, nodes).reshape(-1, spec.N))
    exps, coeffs, offsets = _law_tables(spec)
    out = _kernels.convolve_group(u.values3(), lat.lo3, lat.h3, lat.flat_points, yinv,
                                  np.ascontiguousarray(weights, dtype=float), exps, coeffs, offsets)
    return GridFunction(lat, out.reshape(lat.shape))


@lru_cache(maxsize=None)
def fourier_separable(spec: GroupSpec) -> bool:
    """Law is ``x_k + y_k`` for ``k < N-1`` and ``x + y + P(x', y')`` in the last slot."""
    N = spec.N
    for k, p in enumerate(spec.law):
        rest = p - Polynomial.variable(2 * N, k) - Polynomial.variable(2 * N, N + k)
        if k < N - 1 and not rest.is_zero():
            return False
        if k == N - 1 and (rest.depends_on(N - 1) or rest.depends_on(2 * N - 1)):
            return False
    return True


def fourier_applicable(spec: GroupSpec, lattice: Lattice) -> bool:
    """Separable law, and lattice nodes map to nodes under ``x' -> -x'`` (even counts)."""
    return fourier_separable(spec) and all(k % 2 == 0 for k in lattice.n[:-1])


def fourier_convolve_stack(spec: GroupSpec, phi: GridFunction, stack: np.ndarray) -> np.ndarray:
    """Convolve every frame of ``stack`` (shape ``(F, *lattice.shape)``) with ``phi``."""
    lat = phi.lattice
    if not fourier_applicable(spec, lat):
        raise ValueError(f"group {spec.name!r} on n={lat.n} does not allow method='fourier'")
    N, n = lat.N, np.asarray(lat.n)
    h = np.asarray(lat.h)
    mask = phi.values != 0.0
    w = phi.values[mask] * lat.cell_volume
    z = inverse(spec, lat.points[mask]).reshape(-1, N)
    k = 2.0 * np.pi * np.fft.fftfreq(n[-1], d=h[-1])
    uh = np.fft.fft(stack, axis=-1)
    out = np.zeros_like(uh)
    # z' on the lattice: integer cell offsets
    shifts = np.rint(z[:, : N - 1] / h[: N - 1]).astype(np.int64)
    xprime = lat.points[..., 0, :] if N > 1 else None
    groups = {}
    for s, key in enumerate(map(tuple, shifts)):
        groups.setdefault(key, []).append(s)
    for key in sorted(groups):
        ss = np.asarray(groups[key])
        what = (w[ss, None] * np.exp(1j * np.outer(z[ss, -1], k))).sum(axis=0)
        if N > 1:
            zp = z[ss[0]].copy()
            zp[-1] = 0.0
            xp = np.array(xprime)
            xp[..., -1] = 0.0
            P = multiply(spec, zp, xp)[..., -1]
            phase = np.exp(1j * P[..., None] * k)
            rolled = np.roll(uh, shift=tuple(-np.asarray(key)), axis=tuple(range(1, N)))
            out += rolled * (what * phase)
        else:
            out += uh * what
    return np.real(np.fft.ifft(out, axis=-1))


@lru_cache(maxsize=None)
def _law_tables(spec: GroupSpec):
    return stack_tables(spec.law)


# Mollifiers -----------------------------------------------------------------------

def bump(spec: GroupSpec, pts) -> np.ndarray:
    """Unnormalised smooth bump ``exp(-1/(1 - rho))`` supported in the unit ball.

    ``rho`` is the smooth gauge raised to its polynomial power, so the bump is
    ``C^inf`` and vanishes for ``||x|| >= 1`` in the max norm as well.
    """
    rho, _ = smooth_gauge_power(spec, pts)
    out = np.zeros_like(rho)
    inside = rho < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - rho[inside]))
    return out


@lru_cache(maxsize=None)
def bump_mass(spec: GroupSpec, n: int = 0) -> float:
    """``int bump`` by a fine rectangle rule on ``[-1, 1]^N`` (spectrally accurate)."""
    n = n or {1: 4000, 2: 600, 3: 160}[spec.N]
    x = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    pts = np.stack(np.meshgrid(*([x] * spec.N), indexing="ij"), axis=-1)
    return float(np.sum(bump(spec, pts)) * (2.0 / n) ** spec.N)


def mollifier_kernel(spec: GroupSpec, eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """Closed form of ``phi_eps(x) = eps^-Q phi(D_{1/eps} x)``."""
    if not eps > 0:
        raise DomainError(f"mollifier scale must be positive, got {eps}")
    c = 1.0 / bump_mass(spec)
    Q = spec.Q

    def phi_eps(pts):
        return c * eps ** (-Q) * bump(spec, dilate(spec, 1.0 / eps, pts))

    return phi_eps


def mollifier_resolution(spec: GroupSpec, eps: float, lattice: Lattice) -> np.ndarray:
    """Lattice points across the kernel support along each axis."""
    extent = 2.0 * eps ** np.asarray(spec.weights, dtype=float)
    return extent / np.asarray(lattice.h)


def mollifier(spec: GroupSpec, eps: float, lattice: Lattice, min_points: float = 4.0) -> GridFunction:
    """The kernel ``phi_eps`` sampled on ``lattice``."""
    across = mollifier_resolution(spec, eps, lattice)
    if np.any(across < min_points):
        raise ResolutionError(
            f"eps={eps} gives {np.round(across, 2)} points across the support; need >= {min_points}"
        )
    if np.any(eps ** np.asarray(spec.weights, dtype=float) >= np.asarray(lattice.box)):
        raise AliasingError(f"eps={eps} kernel does not fit in the box")
    return GridFunction.from_callable(lattice, mollifier_kernel(spec, eps))


def mollify(spec: GroupSpec, eps: float, u: GridFunction, normalize: bool = True,
            kernel: GridFunction | None = None, method: str = "auto") -> GridFunction:
    """``u_eps = phi_eps * u``.

    With ``normalize`` the discrete kernel weights are rescaled to unit mass,
    so constants are reproduced exactly.
    """
    phi = kernel if kernel is not None else mollifier(spec, eps, u.lattice)
    if normalize:
        phi = phi / integrate(phi)
    return group_convolve(spec, phi, u, method=method)


@dataclass
class Mollifier:
    """A prepared ``phi_eps`` on one lattice, reusable across many fields."""

    spec: GroupSpec
    eps: float
    lattice: Lattice
    normalize: bool = True
    method: str = "auto"
    kernel: GridFunction = field(init=False)

    def __post_init__(self):
        k = mollifier(self.spec, self.eps, self.lattice)
        self.kernel = k / integrate(k) if self.normalize else k

    def __call__(self, u: GridFunction, check_support: bool = True) -> GridFunction:
        return group_convolve(self.spec, self.kernel, u, check_support=check_support, method=self.method)

    def stack(self, frames: np.ndarray) -> np.ndarray:
        """Convolve a stack of frames ``(F, *shape)`` without support checks."""
        if self.method == "interp" or not fourier_applicable(self.spec, self.lattice):
            return np.stack([self(GridFunction(self.lattice, f), False).values for f in frames])
        return fourier_convolve_stack(self.spec, self.kernel, frames)


# Import / export -----------------------------------------------------------------

def save_grid(f: GridFunction, path) -> tuple[Path, Path]:
    """Write ``<path>.bin`` (row-major float64) and ``<path>.json`` (header)."""
    path = Path(path)
    bin_path, hdr_path = path.with_suffix(".bin"), path.with_suffix(".json")
    np.ascontiguousarray(f.values, dtype="<f8").tofile(bin_path)
    header = {"box": list(f.lattice.box), "n": list(f.lattice.n), "dtype": "float64", "order": "row-major"}
    hdr_path.write_text(json.dumps(header, indent=2, sort_keys=True))
    return bin_path, hdr_path


def load_grid(path) -> GridFunction:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    if header.get("dtype") != "float64" or header.get("order") != "row-major":
        raise ValueError(f"unsupported grid header {header}")
    lat = Lattice(tuple(header["box"]), tuple(header["n"]))
    vals = np.fromfile(path.with_suffix(".bin"), dtype="<f8").reshape(lat.shape)
    return GridFunction(lat, vals)
