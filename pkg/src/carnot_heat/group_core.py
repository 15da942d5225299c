"""Arithmetic of homogeneous (Carnot) groups in graded coordinates.

A :class:`GroupSpec` describes ``G = (R^N, o, D_lambda)`` by explicit
polynomial tables: the group law, the inverse, and the coefficients of the
left and right invariant generators. Group elements are plain float arrays
whose trailing axis has length ``N``; every operation broadcasts over leading
axes, so a batch of 10^4 points is one call.

Generator indices are 1-based (``X_1 .. X_q``) throughout the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, UnknownGroupError
from .polynomial import Polynomial

NORM_KINDS = ("max", "q", "smooth")


@dataclass(frozen=True, eq=False)
class GroupSpec:
    name: str
    N: int
    q: int
    s: int
    weights: tuple
    law: tuple  # N polynomials in 2N variables (x_1..x_N, y_1..y_N)
    inverse_law: tuple  # N polynomials in N variables
    left_fields: tuple  # q tuples of N polynomials in N variables
    right_fields: tuple
    exp_map: Optional[Callable[[int, float], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        w = tuple(int(a) for a in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) != self.N:
            raise DimensionError(f"{self.name}: {len(w)} weights for N={self.N}")
        if w[0] != 1 or any(b < a for a, b in zip(w, w[1:])):
            raise DomainError(f"{self.name}: weights must start at 1 and be nondecreasing, got {w}")
        if not 1 <= self.q <= self.N:
            raise DomainError(f"{self.name}: need 1 <= q <= N")
        if len(self.law) != self.N or any(p.nvars != 2 * self.N for p in self.law):
            raise DimensionError(f"{self.name}: law must be N polynomials in 2N variables")
        if len(self.inverse_law) != self.N or any(p.nvars != self.N for p in self.inverse_law):
            raise DimensionError(f"{self.name}: inverse_law must be N polynomials in N variables")
        for fields_ in (self.left_fields, self.right_fields):
            if len(fields_) != self.q or any(len(f) != self.N for f in fields_):
                raise DimensionError(f"{self.name}: need q fields with N coefficients each")

    @property
    def Q(self) -> int:
        return int(sum(self.weights))

    def fields(self, kind: str) -> tuple:
        if kind == "left":
            return self.left_fields
        if kind == "right":
            return self.right_fields
        raise ValueError(f"field kind must be 'left' or 'right', got {kind!r}")

    # JSON round trip
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "N": self.N,
            "q": self.q,
            "s": self.s,
            "weights": list(self.weights),
            "law": [p.to_pairs() for p in self.law],
            "inverse_law": [p.to_pairs() for p in self.inverse_law],
            "left_fields": [[p.to_pairs() for p in f] for f in self.left_fields],
            "right_fields": [[p.to_pairs() for p in f] for f in self.right_fields],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "GroupSpec":
        N = int(d["N"])
        return cls(
            name=d["name"],
            N=N,
            q=int(d["q"]),
            s=int(d["s"]),
            weights=tuple(d["weights"]),
            law=tuple(Polynomial.from_pairs(2 * N, p) for p in d["law"]),
            inverse_law=tuple(Polynomial.from_pairs(N, p) for p in d["inverse_law"]),
            left_fields=tuple(tuple(Polynomial.from_pairs(N, p) for p in f) for f in d["left_fields"]),
            right_fields=tuple(tuple(Polynomial.from_pairs(N, p) for p in f) for f in d["right_fields"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "GroupSpec":
        return cls.from_dict(json.loads(text))


def _coords(spec: GroupSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != spec.N:
        raise DimensionError(f"{spec.name}: expected coordinates of length {spec.N}, got shape {x.shape}")
    return x


def multiply(spec: GroupSpec, x, y) -> np.ndarray:
    """Group product ``x o y``."""
    x, y = np.broadcast_arrays(_coords(spec, x), _coords(spec, y))
    xy = np.concatenate([x, y], axis=-1)
    return np.stack([p(xy) for p in spec.law], axis=-1)


def inverse(spec: GroupSpec, x) -> np.ndarray:
    x = _coords(spec, x)
    return np.stack([p(x) for p in spec.inverse_law], axis=-1)


def dilate(spec: GroupSpec, lam: float, x) -> np.ndarray:
    """``D_lambda(x) = (lambda^a_1 x_1, ..., lambda^a_N x_N)``."""
    if not lam > 0:
        raise DomainError(f"dilation factor must be positive, got {lam}")
    x = _coords(spec, x)
    return x * np.power(float(lam), np.asarray(spec.weights, dtype=float))


def hom_norm(spec: GroupSpec, x, kind: str = "max") -> np.ndarray:
    """Homogeneous norm of ``x``.

    ``max``: ``max_k |x_k|^(1/a_k)``. ``q``: ``(sum_k |x_k|^(Q/a_k))^(1/Q)``.
    ``smooth``: ``(sum_k x_k^(2m/a_k))^(1/2m)`` with ``m = lcm(a)``; its
    ``2m``-th power is a polynomial, which makes it the gauge of choice for
    building smooth bumps.
    """
    x = _coords(spec, x)
    a = np.asarray(spec.weights, dtype=float)
    ax = np.abs(x)
    if kind == "max":
        return np.max(ax ** (1.0 / a), axis=-1)
    if kind == "q":
        Q = spec.Q
        return np.sum(ax ** (Q / a), axis=-1) ** (1.0 / Q)
    if kind == "smooth":
        m = int(np.lcm.reduce(np.asarray(spec.weights)))
        return np.sum(ax ** (2 * m / a), axis=-1) ** (1.0 / (2 * m))
    raise ValueError(f"norm kind must be one of {NORM_KINDS}, got {kind!r}")


def smooth_gauge_power(spec: GroupSpec, x) -> tuple[np.ndarray, int]:
    """Return ``(sum_k x_k^(2m/a_k), 2m)``: the smooth norm raised to ``2m``."""
    x = _coords(spec, x)
    m = int(np.lcm.reduce(np.asarray(spec.weights)))
    rho = np.zeros(x.shape[:-1])
    for k, ak in enumerate(spec.weights):
        rho = rho + x[..., k] ** (2 * m // ak)
    return rho, 2 * m


def homogeneous_dimension(spec: GroupSpec) -> int:
    return spec.Q


def field_coefficients(spec: GroupSpec, kind: str, i: int, x) -> np.ndarray:
    """Coefficients ``b_i1..b_iN`` of ``X_i`` (or ``X_i^R``) at the points ``x``."""
    _check_generator(spec, i)
    x = _coords(spec, x)
    return np.stack([p(x) for p in spec.fields(kind)[i - 1]], axis=-1)


def _check_generator(spec: GroupSpec, i: int) -> None:
    if not 1 <= i <= spec.q:
        raise DomainError(f"{spec.name}: generator index {i} outside 1..{spec.q}")


def exp_generator(spec: GroupSpec, i: int, t: float) -> np.ndarray:
    """``Exp(t X_i)``: the point reached at time ``t`` along ``X_i`` from 0."""
    _check_generator(spec, i)
    if spec.exp_map is not None:
        return np.asarray(spec.exp_map(i, float(t)), dtype=float)
    if t == 0:
        return np.zeros(spec.N)
    from scipy.integrate import solve_ivp

    coeffs = spec.left_fields[i - 1]
    sol = solve_ivp(
        lambda _, y: np.array([p(y) for p in coeffs]),
        (0.0, float(t)),
        np.zeros(spec.N),
        rtol=1e-12,
        atol=1e-14,
    )
    return sol.y[:, -1]


def graded_exp(N: int) -> Callable[[int, float], np.ndarray]:
    """Exponential of a generator in graded canonical coordinates: ``t e_i``."""

    def _exp(i: int, t: float) -> np.ndarray:
        out = np.zeros(N)
        out[i - 1] = t
        return out

    return _exp


def measure_norm_constants(spec: GroupSpec, n_samples: int = 100_000, seed: int = 0,
                           kind: str = "max", scale: float = 10.0) -> dict:
    """Empirical constants for ``||x^-1|| <= c||x||`` and the quasi-triangle inequality."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-scale, scale, size=(n_samples, spec.N))
    y = rng.uniform(-scale, scale, size=(n_samples, spec.N))
    # mix scales so that small and large elements interact
    x = dilate_each(spec, 10 ** rng.uniform(-2, 0, size=n_samples), x)
    nx, ny = hom_norm(spec, x, kind), hom_norm(spec, y, kind)
    c_inv = float(np.max(hom_norm(spec, inverse(spec, x), kind) / nx))
    c_tri = float(np.max(hom_norm(spec, multiply(spec, x, y), kind) / (nx + ny)))
    return {"norm": kind, "n_samples": n_samples, "c_inverse": c_inv, "c_triangle": c_tri}


def dilate_each(spec: GroupSpec, lams, x) -> np.ndarray:
    """Dilate each row of ``x`` by its own factor."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise DomainError("dilation factors must be positive")
    return _coords(spec, x) * lams[..., None] ** np.asarray(spec.weights, dtype=float)


# Built-in groups ------------------------------------------------------------

def _var(nv, k, c=1.0):
    return Polynomial.variable(nv, k, c)


def _const(nv, c):
    return Polynomial.constant(nv, c)


def abelian(n: int) -> GroupSpec:
    """Euclidean ``R^n`` with the usual dilations."""
    law = tuple(_var(2 * n, k) + _var(2 * n, n + k) for k in range(n))
    inv = tuple(_var(n, k, -1.0) for k in range(n))
    flds = tuple(tuple(_const(n, 1.0 if k == i else 0.0) for k in range(n)) for i in range(n))
    return GroupSpec(
        name=f"r{n}",
        N=n,
        q=n,
        s=1,
        weights=(1,) * n,
        law=law,
        inverse_law=inv,
        left_fields=flds,
        right_fields=flds,
        exp_map=graded_exp(n),
    )


def heisenberg() -> GroupSpec:
    """First Heisenberg group in symmetric coordinates.

    ``(x o y)_3 = x_3 + y_3 + (x_1 y_2 - x_2 y_1)/2``;
    ``X_1 = d_1 - (x_2/2) d_3``, ``X_2 = d_2 + (x_1/2) d_3`` and
    ``X_1^R = d_1 + (x_2/2) d_3``, ``X_2^R = d_2 - (x_1/2) d_3``.
    """
    nv = 6
    x1, x2, x3, y1, y2, y3 = (_var(nv, k) for k in range(6))
    law = (x1 + y1, x2 + y2, x3 + y3 + 0.5 * (x1 * y2) - 0.5 * (x2 * y1))
    inv = tuple(_var(3, k, -1.0) for k in range(3))
    one, zero = _const(3, 1.0), _const(3, 0.0)
    left = (
        (one, zero, _var(3, 1, -0.5)),
        (zero, one, _var(3, 0, 0.5)),
    )
    right = (
        (one, zero, _var(3, 1, 0.5)),
        (zero, one, _var(3, 0, -0.5)),
    )
    return GroupSpec(
        name="heis",
        N=3,
        q=2,
        s=2,
        weights=(1, 1, 2),
        law=law,
        inverse_law=inv,
        left_fields=left,
        right_fields=right,
        exp_map=graded_exp(3),
    )


_REGISTRY: dict[str, Callable[[], GroupSpec]] = {
    "r1": lambda: abelian(1),
    "r2": lambda: abelian(2),
    "heis": heisenberg,
}
_CACHE: dict[str, GroupSpec] = {}


def available_groups() -> list[str]:
    return sorted(set(_REGISTRY) | set(_CACHE))


def get_group(name: str) -> GroupSpec:
    if name in _CACHE:
        return _CACHE[name]
    if name not in _REGISTRY:
        raise UnknownGroupError(name, available_groups())
    spec = _REGISTRY[name]()
    _CACHE[name] = spec
    return spec


def register_group(spec: GroupSpec, replace: bool = False) -> None:
    """Make a user-supplied spec available by name (e.g. a step-3 group)."""
    if not replace and (spec.name in _REGISTRY or spec.name in _CACHE):
        raise ValueError(f"group {spec.name!r} already registered")
    _CACHE[spec.name] = spec


def axiom_residuals(spec: GroupSpec, n_samples: int = 10_000, seed: int = 0,
                    scale: float = 10.0) -> dict:
    """Worst relative residuals of the group axioms over random samples."""
    rng = np.random.default_rng(seed)
    x, y, z = (rng.uniform(-scale, scale, size=(n_samples, spec.N)) for _ in range(3))
    lam = rng.uniform(0.1, 10.0, size=n_samples)
    zero = np.zeros(spec.N)

    def rel(a, b):
        return float(np.max(np.abs(a - b) / (1.0 + np.abs(b))))

    xy = multiply(spec, x, y)
    dl = lambda v: dilate_each(spec, lam, v)  # noqa: E731
    return {
        "associativity": rel(multiply(spec, xy, z), multiply(spec, x, multiply(spec, y, z))),
        "identity": max(rel(multiply(spec, zero, x), x), rel(multiply(spec, x, zero), x)),
        "inverse": max(
            rel(multiply(spec, x, inverse(spec, x)), np.zeros_like(x)),
            rel(multiply(spec, inverse(spec, x), x), np.zeros_like(x)),
        ),
        "dilation": rel(dl(xy), multiply(spec, dl(x), dl(y))),
    }

