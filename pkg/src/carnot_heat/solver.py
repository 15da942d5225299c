"""Time stepping for ``d_t u = sum_ij a_ij(t) X_i X_j u - F`` from ``u(0) = 0``.

Coefficients are piecewise constant in time with breakpoints snapped to step
boundaries, so each step sees one matrix. Forcing enters through its mean over
the step, which keeps singular-but-integrable forcings (``t^(a-1)``) exact in
time.

Implicit Euler solves ``(I - dt A) u^{n+1} = u^n - dt Fbar_n`` by conjugate
gradients. Centered differences make each discrete ``X_i`` skew-adjoint on the
periodic lattice, so ``A`` is symmetric negative semidefinite and the discrete
energy inequality holds exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.sparse.linalg import LinearOperator, cg

from .errors import CFLError, DimensionError, DomainError, InnerSolveError
from .fields import GaussPoly, apply_field_values, apply_operator_values
from .group_core import GroupSpec
from .lattice import GridFunction, Lattice
from .polynomial import Polynomial
from .spacetime import SpaceTimeField, frame_norms, st_inner, st_l2_norm

SCHEMES = ("implicit", "explicit")
SYM_TOL = 1e-12
EIG_TOL = 1e-12
# sup over theta of the symbol of the centered first difference, times h
STENCIL_SYMBOL = {2: 1.0, 4: 1.3722}


# Coefficient paths ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoefficientPath:
    """Piecewise-constant ``a(t)``: ``matrices[p]`` on ``[breakpoints[p], breakpoints[p+1])``."""

    breakpoints: np.ndarray
    matrices: np.ndarray
    nu: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        a = np.asarray(self.matrices, dtype=float)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise DimensionError(f"matrices must have shape (pieces, q, q), got {a.shape}")
        if b.shape != (a.shape[0] + 1,):
            raise DimensionError("need one more breakpoint than matrices")
        if b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must start at 0 and increase strictly")
        if not 0 < self.nu <= 1:
            raise DomainError(f"ellipticity constant must lie in (0, 1], got {self.nu}")
        if np.max(np.abs(a - a.transpose(0, 2, 1)), initial=0.0) > SYM_TOL:
            raise DomainError("coefficient matrices are not symmetric")
        ev = np.linalg.eigvalsh(a)
        lo, hi = self.nu * (1 - EIG_TOL), (1.0 / self.nu) * (1 + EIG_TOL)
        if ev.min() < lo or ev.max() > hi:
            raise DomainError(f"spectrum [{ev.min():.6g}, {ev.max():.6g}] outside [nu, 1/nu]")
        b.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "matrices", a)

    @property
    def q(self) -> int:
        return self.matrices.shape[1]

    @property
    def T(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_pieces(self) -> int:
        return self.matrices.shape[0]

    def piece(self, t) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(idx, 0, self.n_pieces - 1)

    def at(self, t) -> np.ndarray:
        return self.matrices[self.piece(t)]

    def max_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrices).max())

    def integral(self, t) -> np.ndarray:
        """``int_0^t a(s) ds`` (elementwise), exact for the piecewise-constant path."""
        t = np.asarray(t, dtype=float)
        b = self.breakpoints
        lens = np.clip(t[..., None] - b[:-1], 0.0, np.diff(b))
        return np.einsum("...p,pij->...ij", lens, self.matrices)

    def snap(self, dt: float) -> "CoefficientPath":
        """Move breakpoints to the nearest multiple of ``dt``; pieces that collapse are dropped."""
        steps = np.rint(self.breakpoints / dt).astype(np.int64)
        keep = np.flatnonzero(np.diff(steps) > 0)
        if keep.size == 0:
            raise DomainError(f"dt={dt} is longer than the whole path")
        b = np.concatenate([steps[keep], [steps[-1]]]) * dt
        b[0] = 0.0
        meta = dict(self.meta)
        meta["snap_dt"] = dt
        meta["snap_shift"] = float(np.max(np.abs(np.rint(self.breakpoints / dt) * dt - self.breakpoints)))
        return CoefficientPath(b, self.matrices[keep], self.nu, meta)

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "matrices": self.matrices.tolist(),
                "nu": self.nu, "meta": self.meta}


def constant_path(a, T: float, nu: float | None = None) -> CoefficientPath:
    """One piece on ``[0, T]``. ``a`` may be a scalar (``q = 1``) or a matrix."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if nu is None:
        ev = np.linalg.eigvalsh(a)
        nu = float(min(ev.min(), 1.0 / ev.max(), 1.0))
    return CoefficientPath(np.array([0.0, T]), a[None], nu, {"kind": "constant"})


def random_spd(q: int, nu: float, rng: np.random.Generator) -> np.ndarray:
    """``O diag(lam) O^T`` with ``lam ~ U[nu, 1/nu]`` and ``O`` Haar-distributed."""
    lam = rng.uniform(nu, 1.0 / nu, size=q)
    z = rng.standard_normal((q, q))
    o, r = np.linalg.qr(z)
    o = o * np.sign(np.diag(r))
    a = (o * lam) @ o.T
    return 0.5 * (a + a.T)


def random_coefficient_path(q: int, nu: float, n_pieces: int, seed: int, T: float = 1.0) -> CoefficientPath:
    """``n_pieces`` equal-length pieces of independent random SPD matrices."""
    if not 0 < nu <= 1:
        raise DomainError(f"ellipticity constant must lie in (0, 1], got {nu}")
    if n_pieces < 1:
        raise DomainError(f"need at least one piece, got {n_pieces}")
    rng = np.random.default_rng(seed)
    if nu == 1.0:
        mats = np.broadcast_to(np.eye(q), (n_pieces, q, q)).copy()
    else:
        mats = np.stack([random_spd(q, nu, rng) for _ in range(n_pieces)])
    meta = {"kind": "random", "seed": seed, "sampler": "uniform-spectrum-haar"}
    return CoefficientPath(np.linspace(0.0, T, n_pieces + 1), mats, nu, meta)


# Forcing ------------------------------------------------------------------

class Forcing:
    """Forcing evaluator. ``step_mean(t0, t1, lattice)`` is what the schemes consume."""

    def sample(self, t: float, lattice: Lattice) -> np.ndarray:
        raise NotImplementedError

    def step_mean(self, t0: float, t1: float, lattice: Lattice) -> np.ndarray:
        # 3-point Gauss-Legendre
        nodes = (0.5 - math.sqrt(15) / 10, 0.5, 0.5 + math.sqrt(15) / 10)
        wts = (5 / 18, 8 / 18, 5 / 18)
        return sum(w * self.sample(t0 + s * (t1 - t0), lattice) for s, w in zip(nodes, wts))

    def is_zero(self) -> bool:
        return False


class ZeroForcing(Forcing):
    def sample(self, t, lattice):
        return np.zeros(lattice.shape)

    def step_mean(self, t0, t1, lattice):
        return np.zeros(lattice.shape)

    def is_zero(self):
        return True


class FunctionForcing(Forcing):
    """``F(t, x) = fn(t, points)``."""

    def __init__(self, fn: Callable[[float, np.ndarray], np.ndarray]):
        self.fn = fn

    def sample(self, t, lattice):
        return np.broadcast_to(self.fn(t, lattice.points), lattice.shape).astype(float)


@dataclass
class TimeProfile:
    """Scalar time factor; ``antiderivative`` gives exact step means when supplied."""

    fn: Callable[[float], float]
    antiderivative: Callable[[float], float] | None = None

    def mean(self, t0: float, t1: float) -> float:
        if self.antiderivative is not None:
            return (self.antiderivative(t1) - self.antiderivative(t0)) / (t1 - t0)
        val, _ = quad(self.fn, t0, t1, epsabs=0.0, epsrel=1e-12, limit=200)
        return val / (t1 - t0)


class SeparableForcing(Forcing):
    """``F(t, x) = sum_k theta_k(t) g_k(x)``; step means are taken in time only."""

    def __init__(self, terms: Sequence[tuple]):
        self.terms = [(p if isinstance(p, TimeProfile) else TimeProfile(p), g) for p, g in terms]
        self._cache = {}

    def _space(self, k: int, lattice: Lattice) -> np.ndarray:
        key = (k, lattice)
        if key not in self._cache:
            g = self.terms[k][1]
            if isinstance(g, GridFunction):
                if g.lattice != lattice:
                    raise DimensionError("spatial factor lives on a different lattice")
                arr = g.values
            elif isinstance(g, np.ndarray):
                arr = g.reshape(lattice.shape)
            else:
                arr = np.broadcast_to(g(lattice.points), lattice.shape)
            self._cache[key] = np.asarray(arr, dtype=float)
        return self._cache[key]

    def sample(self, t, lattice):
        out = np.zeros(lattice.shape)
        for k, (p, _) in enumerate(self.terms):
            out += p.fn(t) * self._space(k, lattice)
        return out

    def step_mean(self, t0, t1, lattice):
        out = np.zeros(lattice.shape)
        for k, (p, _) in enumerate(self.terms):
            out += p.mean(t0, t1) * self._space(k, lattice)
        return out


# Configuration ---------------------------------------------------------------

@dataclass
class SolverConfig:
    dt: float
    T: float
    scheme: str = "implicit"
    safety: float = 0.9
    order: int = 2
    kind: str = "left"
    cg_rtol: float = 1e-11
    residual_tol: float = 1e-10
    max_iter: int = 5000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt > 0 or not self.T > 0:
            raise DomainError(f"dt and T must be positive, got dt={self.dt}, T={self.T}")
        M = round(self.T / self.dt)
        if M < 1 or abs(M * self.dt - self.T) > 1e-9 * self.T:
            raise DomainError(f"T={self.T} is not a whole number of steps of dt={self.dt}")

    @property
    def M(self) -> int:
        return round(self.T / self.dt)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def operator_bound(spec: GroupSpec, lattice: Lattice, path: CoefficientPath,
                   kind: str = "left", order: int = 2) -> float:
    """Upper bound on the spectral radius of the discrete ``sum a_ij X_i X_j``."""
    kappa = STENCIL_SYMBOL[order]
    tot = 0.0
    pts = lattice.points
    for X in spec.fields(kind):
        s = 0.0
        for k, p in enumerate(X):
            if not p.is_zero():
                s += float(np.max(np.abs(p(pts)))) * kappa / lattice.h[k]
        tot += s * s
    return path.max_eigenvalue() * tot


def cfl_limit(spec: GroupSpec, lattice: Lattice, path: CoefficientPath, config: SolverConfig) -> float:
    return config.safety * 2.0 / operator_bound(spec, lattice, path, config.kind, config.order)


# Stepping --------------------------------------------------------------------

class _Stepper:
    def __init__(self, spec, lattice, config):
        self.spec, self.lat, self.cfg = spec, lattice, config
        self.size = int(np.prod(lattice.shape))
        self.iterations = []
        self.residuals = []

    def A(self, a, v_flat):
        v3 = np.ascontiguousarray(v_flat.reshape(self.lat.shape3))
        return apply_operator_values(self.spec, a, self.lat, v3, self.cfg.kind, self.cfg.order).ravel()

    def implicit(self, a, u, fbar):
        dt = self.cfg.dt
        rhs = (u - dt * fbar).ravel()
        if not np.any(rhs):
            self.iterations.append(0)
            self.residuals.append(0.0)
            return np.zeros_like(u)
        count = [0]

        def mv(v):
            count[0] += 1
            return v - dt * self.A(a, v)

        op = LinearOperator((self.size, self.size), matvec=mv, dtype=float)
        x, info = cg(op, rhs, x0=u.ravel().copy(), rtol=self.cfg.cg_rtol, atol=0.0,
                     maxiter=self.cfg.max_iter)
        res = float(np.linalg.norm(rhs - mv(x)) / np.linalg.norm(rhs))
        if info != 0 or res >= self.cfg.residual_tol:
            raise InnerSolveError(f"CG stopped with info={info}, relative residual {res:.3e}")
        self.iterations.append(count[0])
        self.residuals.append(res)
        return x.reshape(u.shape)

    def explicit(self, a, u, fbar):
        return u + self.cfg.dt * (self.A(a, u.ravel()).reshape(u.shape) - fbar)


def step(spec: GroupSpec, config: SolverConfig, path: CoefficientPath, u_n: GridFunction,
         t_n: float, F: Forcing) -> GridFunction:
    """One step from ``t_n`` to ``t_n + dt``; ``a`` is read at the step midpoint."""
    lat = u_n.lattice
    st = _Stepper(spec, lat, config)
    if config.scheme == "explicit":
        lim = cfl_limit(spec, lat, path, config)
        if config.dt > lim:
            raise CFLError(f"dt={config.dt} exceeds the explicit limit {lim:.3e}")
    a = path.at(t_n + 0.5 * config.dt)
    fbar = _fbar(config, F, t_n, lat)
    new = (st.implicit if config.scheme == "implicit" else st.explicit)(a, u_n.values, fbar)
    return GridFunction(lat, new)


def _fbar(config, F, t_n, lat):
    if config.scheme == "explicit":
        return F.sample(t_n, lat)
    return F.step_mean(t_n, t_n + config.dt, lat)


def solve(spec: GroupSpec, config: SolverConfig, path: CoefficientPath, F: Forcing,
          lattice: Lattice) -> SpaceTimeField:
    """Trajectory from ``u(0) = 0``.

    ``diagnostics`` holds, per step, the inner-solve iterations and relative
    residual, and the strong residual ``|| -D_t u + A u - Fbar ||``.
    """
    if lattice.N != spec.N:
        raise DimensionError(f"lattice dimension {lattice.N} != group dimension {spec.N}")
    if path.q != spec.q:
        raise DimensionError(f"path has q={path.q}, group has q={spec.q}")
    if path.T + 1e-12 < config.T:
        raise DomainError(f"path ends at {path.T} before T={config.T}")
    path = path.snap(config.dt)
    if config.scheme == "explicit":
        lim = cfl_limit(spec, lattice, path, config)
        if config.dt > lim:
            raise CFLError(f"dt={config.dt} exceeds the explicit limit {lim:.3e}")
    st = _Stepper(spec, lattice, config)
    M, dt = config.M, config.dt
    frames = np.zeros((M + 1,) + lattice.shape)
    fbars = np.zeros_like(frames)
    strong = np.zeros(M + 1)
    advance = st.implicit if config.scheme == "implicit" else st.explicit
    for n in range(M):
        t = n * dt
        a = path.at(t + 0.5 * dt)
        fbar = _fbar(config, F, t, lattice)
        fbars[n + 1] = fbar
        frames[n + 1] = advance(a, frames[n], fbar)
        lvl = frames[n + 1] if config.scheme == "implicit" else frames[n]
        r = -(frames[n + 1] - frames[n]) / dt + st.A(a, lvl.ravel()).reshape(lattice.shape) - fbar
        strong[n + 1] = math.sqrt(float(np.sum(r * r)) * lattice.cell_volume)
    diag = {
        "scheme": config.scheme,
        "cg_iterations": st.iterations,
        "cg_residuals": st.residuals,
        "strong_residual": strong.tolist(),
        "path_snap_shift": path.meta.get("snap_shift", 0.0),
    }
    out = SpaceTimeField(lattice, dt, frames, diag)
    out.diagnostics["_fbar"] = SpaceTimeField(lattice, dt, fbars)
    out.diagnostics["_path"] = path
    return out


def forcing_field(u: SpaceTimeField, F: Forcing, config: SolverConfig) -> SpaceTimeField:
    """The forcing as the scheme saw it, aligned with frames ``1..M``."""
    cached = u.diagnostics.get("_fbar")
    if cached is not None:
        return cached
    fr = np.zeros_like(u.frames)
    for n in range(u.M):
        fr[n + 1] = _fbar(config, F, n * u.dt, u.lattice)
    return SpaceTimeField(u.lattice, u.dt, fr)


# Energy diagnostics -------------------------------------------------------------

def gradient_frames(spec: GroupSpec, u: SpaceTimeField, kind: str = "left", order: int = 2) -> np.ndarray:
    """``X_i u(t_n)`` for all ``i`` and frames: shape ``(q, M+1, *shape)``."""
    lat = u.lattice
    out = np.zeros((spec.q,) + u.frames.shape)
    for n in range(1, u.M + 1):
        v3 = np.ascontiguousarray(u.frames[n].reshape(lat.shape3))
        for i in range(spec.q):
            out[i, n] = apply_field_values(spec, kind, i + 1, lat, v3, order).reshape(lat.shape)
    return out


@dataclass
class EnergyIdentity:
    lhs: float            # -int int u F
    final: float          # 1/2 ||u(T)||^2
    quad_form: float      # sum int a_ij X_i u X_j u
    nu_grad2: float       # nu ||grad_X u||^2
    residual: float
    relative: float


def energy_identity_residual(spec: GroupSpec, path: CoefficientPath, u: SpaceTimeField, F: Forcing,
                             config: SolverConfig) -> EnergyIdentity:
    """Defect in ``-int int u F = 1/2 ||u(T)||^2 + sum int a_ij X_i u X_j u``.

    For implicit Euler the defect is ``1/2 sum ||u^{n+1} - u^n||^2``, which is
    ``O(dt)``.
    """
    path = u.diagnostics.get("_path") or path.snap(u.dt)
    Fbar = forcing_field(u, F, config)
    grads = gradient_frames(spec, u, config.kind, config.order)
    dv = u.lattice.cell_volume
    quad_form = 0.0
    for n in range(1, u.M + 1):
        a = path.at((n - 0.5) * u.dt)
        g = grads[:, n].reshape(spec.q, -1)
        quad_form += float(np.einsum("ij,ip,jp->", a, g, g)) * dv * u.dt
    lhs = -st_inner(u, Fbar)
    final = 0.5 * float(frame_norms(u)[-1] ** 2)
    nu_grad2 = path.nu * float(np.sum(grads[:, 1:] ** 2) * dv * u.dt)
    res = lhs - final - quad_form
    scale = final + quad_form
    rel = abs(res) / scale if scale > 0 else abs(res)
    return EnergyIdentity(lhs, final, quad_form, nu_grad2, abs(res), rel)


@dataclass
class EnergyCheck:
    ratio: float
    grad2: float
    f_norm: float
    u_norm: float
    nu: float
    degenerate: bool = False


def energy_estimate_check(spec: GroupSpec, path: CoefficientPath, u: SpaceTimeField, F: Forcing,
                          config: SolverConfig) -> EnergyCheck:
    """``||grad_X u||^2 / (nu^-1 ||F|| ||u||)`` with space-time L2 norms."""
    Fbar = forcing_field(u, F, config)
    grads = gradient_frames(spec, u, config.kind, config.order)
    grad2 = float(np.sum(grads[:, 1:] ** 2) * u.lattice.cell_volume * u.dt)
    fn, un = st_l2_norm(Fbar), st_l2_norm(u)
    den = fn * un / path.nu
    if den == 0:
        return EnergyCheck(0.0, grad2, fn, un, path.nu, True)
    return EnergyCheck(grad2 / den, grad2, fn, un, path.nu, False)


# Weak-form diagnostic ----------------------------------------------------------------

def weak_test_functions(spec: GroupSpec, lattice: Lattice, n: int = 10, seed: int = 0,
                 width: float = 0.25) -> list:
    """``n`` Gaussian-times-polynomial test functions well inside the box."""
    rng = np.random.default_rng(seed)
    N = spec.N
    half = np.asarray(lattice.box)
    out = []
    for _ in range(n):
        c = rng.uniform(-0.3, 0.3, size=N) * half
        sig = width * half
        E = Polynomial.zero(N)
        for k in range(N):
            xk = Polynomial.variable(N, k) - Polynomial.constant(N, c[k])
            E = E - xk * xk * (0.5 / sig[k] ** 2)
        P = Polynomial.constant(N, rng.uniform(0.5, 1.5))
        for k in range(N):
            P = P + Polynomial.variable(N, k, rng.normal(scale=0.5 / half[k]))
        out.append(GaussPoly(P, E))
    return out


def weak_residual(spec: GroupSpec, path: CoefficientPath, u: SpaceTimeField, F: Forcing,
                  config: SolverConfig, tests: Sequence[GaussPoly] | None = None, seed: int = 0) -> dict:
    """Per-frame defect of ``<-D_t u, phi> + sum a_ij <u, X_j X_i phi> - <F, phi>``.

    Derivatives of ``phi`` are exact, so the defect measures spatial and time
    truncation of the discrete solution, not the inner solve.
    """
    lat = u.lattice
    path = u.diagnostics.get("_path") or path.snap(u.dt)
    tests = list(tests) if tests is not None else weak_test_functions(spec, lat, seed=seed)
    Fbar = forcing_field(u, F, config)
    fields = spec.fields(config.kind)
    dv = lat.cell_volume
    per_test = []
    for phi in tests:
        phi_v = phi(lat.points)
        second = {(i, j): phi.apply(fields[i]).apply(fields[j])(lat.points)
                  for i in range(spec.q) for j in range(spec.q)}
        worst = 0.0
        scale = 0.0
        for n in range(1, u.M + 1):
            a = path.at((n - 0.5) * u.dt)
            dtu = (u.frames[n] - u.frames[n - 1]) / u.dt
            val = -np.sum(dtu * phi_v)
            for (i, j), s in second.items():
                val += a[i, j] * np.sum(u.frames[n] * s)
            val -= np.sum(Fbar.frames[n] * phi_v)
            worst = max(worst, abs(val) * dv)
            scale = max(scale, abs(np.sum(Fbar.frames[n] * phi_v)) * dv)
        per_test.append({"max_abs": worst, "relative": worst / scale if scale > 0 else worst})
    return {"per_test": per_test,
            "max_abs": max(p["max_abs"] for p in per_test),
            "max_relative": max(p["relative"] for p in per_test),
            "seed": seed}


# Manufactured solution --------------------------------------------------------------

def manufactured_forcing(spec: GroupSpec, path: CoefficientPath, g: GridFunction,
                         kind: str = "left", order: int = 2) -> SeparableForcing:
    """``F = -g + t sum a_ij(t) X_i X_j g`` so that ``u* = t g`` solves the lattice problem in space."""
    lat = g.lattice
    q = spec.q
    terms = [(TimeProfile(lambda t: -1.0, lambda t: -t), g.values)]
    v3 = g.values3()
    xg = [apply_field_values(spec, kind, j + 1, lat, v3, order) for j in range(q)]
    for i in range(q):
        for j in range(q):
            xxg = apply_field_values(spec, kind, i + 1, lat, np.ascontiguousarray(xg[j]), order)
            terms.append((TimeProfile(lambda t, i=i, j=j: t * float(path.at(t)[i, j])),
                          xxg.reshape(lat.shape)))
    return SeparableForcing(terms)


# Trajectory export ----------------------------------------------------------------------

def export_trajectory(u: SpaceTimeField, directory, path: CoefficientPath | None = None,
                      seed: int | None = None) -> Path:
    """Write ``frame_XXXXX.bin`` (little-endian float64, row-major) and ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for n in range(u.M + 1):
        name = f"frame_{n:05d}.bin"
        np.ascontiguousarray(u.frames[n], dtype="<f8").tofile(d / name)
        names.append(name)
    manifest = {
        "dt": u.dt, "T": u.T, "M": u.M, "lattice": u.lattice.to_dict(),
        "path_breakpoints": None if path is None else path.breakpoints.tolist(),
        "seed": seed, "dtype": "float64", "order": "row-major", "frames": names,
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return d / "manifest.json"


def load_trajectory(directory) -> SpaceTimeField:
    d = Path(directory)
    m = json.loads((d / "manifest.json").read_text())
    lat = Lattice(tuple(m["lattice"]["box"]), tuple(m["lattice"]["n"]))
    frames = [np.fromfile(d / name, dtype="<f8").reshape(lat.shape) for name in m["frames"]]
    return SpaceTimeField(lat, m["dt"], frames)
