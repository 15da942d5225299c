"""Space-time fields: a lattice plus uniformly spaced time frames."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DimensionError, DomainError
from .lattice import GridFunction, Lattice


class SpaceTimeField:
    """Frames ``u(t_n, .)`` for ``t_n = n * dt``, ``n = 0..M``.

    Space-time L2 quantities use the right-endpoint rule in time,
    ``||u||^2 = dt * sum_{n=1}^{M} ||u(t_n)||^2``, which matches the implicit
    Euler time levels exactly.
    """

    __slots__ = ("lattice", "dt", "frames", "diagnostics")

    def __init__(self, lattice: Lattice, dt: float, frames, diagnostics: dict | None = None):
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt}")
        frames = np.array(frames, dtype=float)
        if frames.ndim != lattice.N + 1 or frames.shape[1:] != lattice.shape:
            raise DimensionError(f"frames shape {frames.shape} does not match lattice {lattice.shape}")
        if frames.shape[0] < 2:
            raise DimensionError("need at least two frames")
        if not np.all(np.isfinite(frames)):
            raise ValueError("frames contain non-finite values")
        frames.flags.writeable = False
        self.lattice = lattice
        self.dt = float(dt)
        self.frames = frames
        self.diagnostics = dict(diagnostics or {})

    @classmethod
    def from_callable(cls, lattice: Lattice, dt: float, M: int,
                      fn: Callable[[float, np.ndarray], np.ndarray]) -> "SpaceTimeField":
        pts = lattice.points
        frames = [np.broadcast_to(fn(n * dt, pts), lattice.shape) for n in range(M + 1)]
        return cls(lattice, dt, frames)

    @classmethod
    def zeros(cls, lattice: Lattice, dt: float, M: int) -> "SpaceTimeField":
        return cls(lattice, dt, np.zeros((M + 1,) + lattice.shape))

    @property
    def M(self) -> int:
        return self.frames.shape[0] - 1

    @property
    def T(self) -> float:
        return self.M * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.dt

    def frame(self, n: int) -> GridFunction:
        return GridFunction(self.lattice, self.frames[n])

    def __len__(self):
        return self.frames.shape[0]

    def __iter__(self):
        return (self.frame(n) for n in range(len(self)))

    def map(self, fn: Callable[[GridFunction], GridFunction]) -> "SpaceTimeField":
        """Apply a spatial operator frame by frame."""
        return SpaceTimeField(self.lattice, self.dt, [fn(f).values for f in self])

    def _other(self, other):
        if isinstance(other, SpaceTimeField):
            if other.lattice != self.lattice or other.frames.shape != self.frames.shape:
                raise DimensionError("space-time fields live on different grids")
            if other.dt != self.dt:
                raise DimensionError("space-time fields have different time steps")
            return other.frames
        return other

    def __add__(self, other):
        return SpaceTimeField(self.lattice, self.dt, self.frames + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SpaceTimeField(self.lattice, self.dt, self.frames - self._other(other))

    def __mul__(self, other):
        return SpaceTimeField(self.lattice, self.dt, self.frames * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SpaceTimeField(self.lattice, self.dt, -self.frames)

    def __repr__(self):
        return f"SpaceTimeField(n={self.lattice.n}, M={self.M}, dt={self.dt:g})"


def frame_norms(u: SpaceTimeField) -> np.ndarray:
    """``||u(t_n)||_L2`` for every frame."""
    axes = tuple(range(1, u.frames.ndim))
    return np.sqrt(np.sum(u.frames ** 2, axis=axes) * u.lattice.cell_volume)


def st_l2_norm(u) -> float:
    """L2 norm over space-time; a plain GridFunction is treated as a single slice."""
    if isinstance(u, GridFunction):
        return float(np.sqrt(np.sum(u.values ** 2) * u.lattice.cell_volume))
    return float(np.sqrt(u.dt * np.sum(frame_norms(u)[1:] ** 2)))


def st_inner(u: SpaceTimeField, v: SpaceTimeField) -> float:
    v_frames = u._other(v)
    return float(u.dt * np.sum(u.frames[1:] * v_frames[1:]) * u.lattice.cell_volume)


def time_difference(u: SpaceTimeField) -> SpaceTimeField:
    """Backward difference quotient ``(u^n - u^{n-1}) / dt``; frame 0 is set to 0."""
    d = np.zeros_like(u.frames)
    d[1:] = np.diff(u.frames, axis=0) / u.dt
    return SpaceTimeField(u.lattice, u.dt, d)
