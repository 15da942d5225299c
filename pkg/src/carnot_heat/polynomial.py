"""Sparse multivariate polynomials with real coefficients.

Polynomials are stored as a table ``{multi-index: coefficient}``. This is all
the algebra the group laws and vector-field coefficients of a Carnot group
need: sums, products, partial derivatives and vectorised evaluation.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

_ZERO_TOL = 0.0


class Polynomial:
    """A polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], float] | None = None):
        self.nvars = int(nvars)
        clean: dict[tuple[int, ...], float] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise ValueError(f"multi-index {exps} has wrong length for {self.nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = clean.get(exps, 0.0) + float(coeff)
            if abs(c) > _ZERO_TOL:
                clean[exps] = c
            else:
                clean.pop(exps, None)
        self.terms = clean

    # construction helpers
    @classmethod
    def constant(cls, nvars: int, c: float) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, k: int, c: float = 1.0) -> "Polynomial":
        exps = [0] * nvars
        exps[k] = 1
        return cls(nvars, {tuple(exps): c})

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def from_pairs(cls, nvars: int, pairs: Iterable[Sequence]) -> "Polynomial":
        """Build from ``[[multi-index], coefficient]`` pairs (the JSON form)."""
        terms: dict[tuple[int, ...], float] = {}
        for exps, coeff in pairs:
            key = tuple(int(e) for e in exps)
            terms[key] = terms.get(key, 0.0) + float(coeff)
        return cls(nvars, terms)

    def to_pairs(self) -> list[list]:
        return [[list(e), c] for e, c in sorted(self.terms.items())]

    # algebra
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def _check(self, other: "Polynomial") -> None:
        if other.nvars != self.nvars:
            raise ValueError("polynomials live in different numbers of variables")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {e: c * float(other) for e, c in self.terms.items()})
        self._check(other)
        out: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.terms.items()))))

    def allclose(self, other: "Polynomial", atol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= atol for c in diff.terms.values())

    def diff(self, k: int) -> "Polynomial":
        """Partial derivative with respect to variable ``k``."""
        out: dict[tuple[int, ...], float] = {}
        for e, c in self.terms.items():
            if e[k] == 0:
                continue
            ne = list(e)
            ne[k] -= 1
            out[tuple(ne)] = out.get(tuple(ne), 0.0) + c * e[k]
        return Polynomial(self.nvars, out)

    def depends_on(self, k: int) -> bool:
        return any(e[k] for e in self.terms)

    # evaluation
    def __call__(self, points) -> np.ndarray:
        """Evaluate at ``points`` of shape ``(..., nvars)``."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.nvars:
            raise ValueError(f"expected trailing dimension {self.nvars}, got {pts.shape}")
        out = np.zeros(pts.shape[:-1])
        if not self.terms:
            return out
        max_pow = [max(e[k] for e in self.terms) for k in range(self.nvars)]
        powers = []
        for k in range(self.nvars):
            col = pts[..., k]
            pk = [np.ones_like(col)]
            for _ in range(max_pow[k]):
                pk.append(pk[-1] * col)
            powers.append(pk)
        for e, c in self.terms.items():
            term = np.full(pts.shape[:-1], c)
            for k, ek in enumerate(e):
                if ek:
                    term = term * powers[k][ek]
            out = out + term
        return out

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """Exponent matrix ``(T, nvars)`` and coefficient vector ``(T,)``."""
        items = sorted(self.terms.items())
        if not items:
            return np.zeros((0, self.nvars), dtype=np.int64), np.zeros(0)
        exps = np.array([e for e, _ in items], dtype=np.int64)
        coeffs = np.array([c for _, c in items], dtype=float)
        return exps, coeffs

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(f"x{k}^{p}" if p > 1 else f"x{k}" for k, p in enumerate(e) if p)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " + ".join(parts) + ")"


def stack_tables(polys: Sequence[Polynomial]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten a list of polynomials into (exps, coeffs, offsets) arrays.

    Term ``t`` of polynomial ``k`` lives at rows ``offsets[k]:offsets[k+1]``.
    """
    exps, coeffs, offsets = [], [], [0]
    for p in polys:
        e, c = p.table()
        exps.append(e)
        coeffs.append(c)
        offsets.append(offsets[-1] + len(c))
    nv = polys[0].nvars if polys else 0
    return (
        np.ascontiguousarray(np.concatenate(exps) if exps else np.zeros((0, nv), np.int64), dtype=np.int64),
        np.ascontiguousarray(np.concatenate(coeffs) if coeffs else np.zeros(0)),
        np.asarray(offsets, dtype=np.int64),
    )
