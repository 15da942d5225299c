"""Seeded synthetic data: band-limited fields, rough time profiles, Gaussians."""

from __future__ import annotations

from itertools import product

import numpy as np

from ..group_core import GroupSpec
from ..lattice import CutoffFunction, GridFunction, Lattice
from ..solver import TimeProfile


def band_limited(lattice: Lattice, rng: np.random.Generator, modes: int = 2, decay: float = 1.0) -> np.ndarray:
    """``sum_m c_m cos(pi m.x / L + phase_m)`` over ``|m_k| <= modes`` with ``|c_m| ~ (1+|m|)^-decay``."""
    pts = lattice.points
    L = np.asarray(lattice.box)
    out = np.zeros(lattice.shape)
    for m in product(range(modes + 1), repeat=lattice.N):
        m = np.asarray(m, dtype=float)
        amp = rng.normal() / (1.0 + np.linalg.norm(m)) ** decay
        phase = rng.uniform(0, 2 * np.pi)
        out += amp * np.cos(np.pi * (pts @ (m / L)) + phase)
    return out


def localized_field(spec: GroupSpec, lattice: Lattice, rng: np.random.Generator,
                    r0: float, r1: float, modes: int = 2) -> GridFunction:
    """Band-limited data times a smooth cutoff; normalised to unit L2 norm."""
    cut = CutoffFunction(spec, r0, r1).on(lattice).values
    vals = cut * band_limited(lattice, rng, modes)
    nrm = np.sqrt(np.sum(vals ** 2) * lattice.cell_volume)
    return GridFunction(lattice, vals / nrm if nrm > 0 else vals)


def gaussian(widths, center=None):
    """``exp(-sum (x_k - c_k)^2 / w_k)`` as a callable on points."""
    w = np.asarray(widths, dtype=float)

    def fn(pts):
        c = np.zeros(pts.shape[-1]) if center is None else np.asarray(center, dtype=float)
        return np.exp(-np.sum((pts - c) ** 2 / w, axis=-1))

    return fn


def rough_time_profile(rng: np.random.Generator, T: float, pieces: int = 8) -> TimeProfile:
    """Piecewise-constant values in ``[-1, 1]`` on equal pieces, with exact antiderivative."""
    vals = rng.uniform(-1.0, 1.0, size=pieces)
    edges = np.linspace(0.0, T, pieces + 1)
    cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(edges))])

    def fn(t):
        p = min(max(int(np.searchsorted(edges, t, side="right")) - 1, 0), pieces - 1)
        return float(vals[p])

    def anti(t):
        p = min(max(int(np.searchsorted(edges, t, side="right")) - 1, 0), pieces - 1)
        return float(cum[p] + vals[p] * (t - edges[p]))

    return TimeProfile(fn, anti)


def smooth_time_profile(omega: float = 2.0, phase: float = 0.0, base: float = 1.0) -> TimeProfile:
    """``base + sin(omega t + phase) / 2``."""
    return TimeProfile(
        lambda t: base + 0.5 * np.sin(omega * t + phase),
        lambda t: base * t - 0.5 * np.cos(omega * t + phase) / omega,
    )
