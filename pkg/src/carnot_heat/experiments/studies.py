"""Experiment runners. Each returns plain data; pass/fail decisions live in ``suites``."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from ..difference import gain_exponent, horizontal_gradient_norm, loglog_fit, sobolev_norm
from ..errors import DomainError, UnsupportedOperation
from ..fields import (GaussPoly, apply_operator_values, commutation_check, hormander_rank,
                      integration_by_parts_residual, partial_values)
from ..group_core import GroupSpec, axiom_residuals, get_group
from ..lattice import CutoffFunction, GridFunction, Lattice, Mollifier
from ..solver import (CoefficientPath, SeparableForcing, SolverConfig, TimeProfile, constant_path,
                      energy_estimate_check, energy_identity_residual, random_coefficient_path,
                      solve, weak_residual, weak_test_functions)
from ..spacetime import SpaceTimeField, st_l2_norm
from .synthetic import gaussian, localized_field, rough_time_profile, smooth_time_profile


def pmap(fn, items, workers: int = 1) -> list:
    """Ordered map; a process pool when ``workers > 1``."""
    items = list(items)
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def variation(values) -> float:
    """``max / min - 1`` (0 for an all-zero list, ``inf`` if only some entries vanish)."""
    v = np.abs(np.asarray(values, dtype=float))
    if np.all(v == 0):
        return 0.0
    if np.any(v == 0):
        return math.inf
    return float(v.max() / v.min() - 1.0)


# Group and field identities -------------------------------------------------------

def run_group_axioms(names=("r1", "r2", "heis"), n_samples: int = 10_000, seed: int = 0) -> dict:
    return {name: axiom_residuals(get_group(name), n_samples=n_samples, seed=seed) for name in names}


def run_hormander(spec: GroupSpec, n_points: int = 100, seed: int = 0, scale: float = 5.0) -> dict:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-scale, scale, size=(n_points, spec.N))
    ranks = {d: [hormander_rank(spec, d, p) for p in pts] for d in (1, 2)}
    return {"depth1": ranks[1], "depth2": ranks[2]}


def _test_pair(spec, seed, width):
    lat = Lattice((3.0,) * spec.N, (16,) * spec.N)
    f, g = weak_test_functions(spec, lat, n=2, seed=seed, width=width)
    return f, g


def run_ibp_refinement(spec: GroupSpec, ladder=(16, 32, 64), box: float = 3.0, seed: int = 3,
                       width: float = 0.2, kind: str = "left") -> dict:
    """Transpose identity against exact ``X_i f``; also the all-discrete residual."""
    f, g = _test_pair(spec, seed, width)
    out = {"h": [], "residual": {}, "discrete": {}}
    for i in range(1, spec.q + 1):
        out["residual"][i], out["discrete"][i] = [], []
    for n in ladder:
        lat = Lattice((box,) * spec.N, (n,) * spec.N)
        out["h"].append(lat.h[0])
        F, G = GridFunction.from_callable(lat, f), GridFunction.from_callable(lat, g)
        for i in range(1, spec.q + 1):
            Xf = GridFunction.from_callable(lat, f.apply(spec.fields(kind)[i - 1]))
            out["residual"][i].append(integration_by_parts_residual(spec, F, G, i, kind, exact_Xf=Xf))
            out["discrete"][i].append(integration_by_parts_residual(spec, F, G, i, kind))
    out["slope"] = {i: loglog_fit(out["h"], r)[0] for i, r in out["residual"].items()}
    return out


def run_commutation_refinement(spec: GroupSpec, ladder=(32, 64, 128), box: float = 2.0,
                               r0: float = 0.6, r1: float = 1.6) -> dict:
    """``||[X_i, X_j^R] f||`` under refinement for compactly supported smooth ``f``."""
    cut = CutoffFunction(spec, r0, r1)
    pairs = [(i, j) for i in range(1, spec.q + 1) for j in range(1, spec.q + 1)]
    out = {"h": [], "residual": {p: [] for p in pairs}}
    for n in ladder:
        lat = Lattice((box,) * spec.N, (n,) * spec.N)
        out["h"].append(lat.h[0])
        f = GridFunction.from_callable(lat, lambda p: cut(p) * np.cos(p[..., 0] + 0.5 * p[..., -1]))
        for p in pairs:
            out["residual"][p].append(commutation_check(spec, f, *p))
    out["slope"] = {}
    for p, r in out["residual"].items():
        if min(r) > 1e-12 * max(max(r), 1.0):
            out["slope"][p] = loglog_fit(out["h"], r)[0]
    return out


# Mollifier commutation ----------------------------------------------------------------

def mollifier_residual(spec: GroupSpec, u: SpaceTimeField, mol: Mollifier, zeta: np.ndarray,
                       ref_order: int) -> float:
    """``||zeta (L_disc(u_eps) - F_eps)||`` over frames ``1..M``.

    ``L_disc`` uses ``ref_order`` stencils and the backward time difference;
    ``F_eps`` mollifies the step-mean forcing the solver consumed.
    """
    lat = u.lattice
    path = u.diagnostics["_path"]
    ue = mol.stack(u.frames)
    fe = mol.stack(u.diagnostics["_fbar"].frames)
    tot = 0.0
    for n in range(1, u.M + 1):
        a = path.at((n - 0.5) * u.dt)
        v3 = np.ascontiguousarray(ue[n].reshape(lat.shape3))
        Lu = apply_operator_values(spec, a, lat, v3, "left", ref_order).reshape(lat.shape)
        r = Lu - (ue[n] - ue[n - 1]) / u.dt - fe[n]
        tot += float(np.sum((zeta * r) ** 2)) * lat.cell_volume * u.dt
    return math.sqrt(tot)


def run_mollifier_commutation(spec: GroupSpec, lattices, eps_ladder, box=2.0, T: float = 0.2, M: int = 8,
                              nu: float = 0.25, seed: int = 0, widths=(1.2, 1.2, 1.6),
                              zeta_radii=(0.6, 0.96), ref_order: int = 4, forcing=None) -> dict:
    """Residual of ``L(u_eps) = F_eps`` over an ``eps`` ladder and a lattice ladder."""
    path = random_coefficient_path(spec.q, nu, M, seed, T=T)
    cfg = SolverConfig(dt=T / M, T=T)
    zc = CutoffFunction(spec, *zeta_radii)
    rows = []
    for n in lattices:
        n = tuple(n) if np.ndim(n) else (n,) * spec.N
        lat = Lattice((box,) * spec.N, n)
        if forcing is None:
            g = GridFunction.from_callable(lat, gaussian(widths[: spec.N]))
            F = SeparableForcing([(TimeProfile(lambda t: 1 + t, lambda t: t + t * t / 2), g)])
        else:
            F = forcing(lat)
        u = solve(spec, cfg, path, F, lat)
        zeta = zc.on(lat).values
        for eps in eps_ladder:
            mol = Mollifier(spec, eps, lat)
            res = mollifier_residual(spec, u, mol, zeta, ref_order)
            rows.append({"n": list(n), "h_max": max(lat.h), "eps": eps, "residual": res,
                         "ref_order": ref_order})
    return {"rows": rows, "eps_ladder": list(eps_ladder), "lattices": [list(np.atleast_1d(n)) for n in lattices],
            "T": T, "M": M, "seed": seed, "zeta": zc.to_dict()}


# Energy estimate ---------------------------------------------------------------------

@dataclass
class EnergyTrial:
    seed: int
    ratio: float
    identity_relative: float
    quad_form_margin: float
    weak_relative: float
    cg_iterations: int
    degenerate: bool


def _energy_trial(args) -> EnergyTrial:
    spec_name, n, box, T, M, nu, pieces, seed, weak = args
    spec = get_group(spec_name)
    lat = Lattice((box,) * spec.N, (n,) * spec.N)
    rng = np.random.default_rng(seed)
    path = random_coefficient_path(spec.q, nu, pieces, seed, T=T)
    half = min(lat.box)
    g = localized_field(spec, lat, rng, 0.3 * half, 0.6 * half)
    F = SeparableForcing([(rough_time_profile(rng, T, 8), g)])
    cfg = SolverConfig(dt=T / M, T=T)
    u = solve(spec, cfg, path, F, lat)
    chk = energy_estimate_check(spec, path, u, F, cfg)
    ident = energy_identity_residual(spec, path, u, F, cfg)
    wr = weak_residual_summary(spec, path, u, F, cfg, seed) if weak else float("nan")
    return EnergyTrial(seed, chk.ratio, ident.relative, ident.quad_form - ident.nu_grad2, wr,
                       int(sum(u.diagnostics["cg_iterations"])), chk.degenerate)


def weak_residual_summary(spec, path, u, F, cfg, seed) -> float:
    return weak_residual(spec, path, u, F, cfg, seed=seed)["max_relative"]


def run_energy_trials(spec_name: str = "heis", trials: int = 20, n: int = 32, box: float = 2.0,
                      T: float = 0.5, M: int = 64, nu: float = 0.25, pieces: int = 64, seed: int = 0,
                      weak_every: int = 10, workers: int = 1) -> list:
    args = [(spec_name, n, box, T, M, nu, pieces, seed * 1000 + k, k % weak_every == 0)
            for k in range(trials)]
    return pmap(_energy_trial, args, workers)


# Counterexample -------------------------------------------------------------------------

@dataclass
class HolderReport:
    exponent: float
    r2: float
    modulus: float
    zero_trace: float
    derivative: tuple
    cutoff: dict
    dt: float
    pairs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["derivative"] = list(self.derivative)
        d["pairs"] = [list(p) for p in self.pairs]
        return d


def counterexample_closed_form(alpha: float, path: CoefficientPath):
    """``U(t, x) = t^alpha exp(-int_0^t a) sin x`` and ``F = -alpha t^(alpha-1) exp(-int_0^t a) sin x``."""
    def decay(t):
        return math.exp(-float(path.integral(t)[0, 0]))

    def U(t, pts):
        return t ** alpha * decay(t) * np.sin(pts[..., 0])

    def theta(t):
        return -alpha * t ** (alpha - 1.0) * decay(t)

    return U, theta


def run_counterexample(alpha: float, path: CoefficientPath | None = None, T: float = 0.05, M: int = 512,
                       n: int = 64, fit_window=(4.0, 0.25)) -> HolderReport:
    """Solve ``L U = F`` on R^1 and fit the time exponent of ``sup_x |U(t, .)|`` near 0.

    The fit is OLS of ``log sup|U|`` on ``log t`` over ``[4 dt, T/4]``.
    """
    if not alpha > 0.5:
        raise DomainError(f"alpha={alpha}: the forcing is square integrable only for alpha > 1/2")
    spec = get_group("r1")
    path = path if path is not None else constant_path(1.0, T)
    if path.q != 1:
        raise UnsupportedOperation("the counterexample is scalar: need a q=1 coefficient path")
    lat = Lattice((math.pi,), (n,))
    U, theta = counterexample_closed_form(alpha, path.snap(T / M))
    F = SeparableForcing([(TimeProfile(theta), lambda p: np.sin(p[..., 0]))])
    cfg = SolverConfig(dt=T / M, T=T)
    u = solve(spec, cfg, path, F, lat)
    exact = SpaceTimeField.from_callable(lat, u.dt, M, U)
    err = st_l2_norm(u - exact)
    t = u.times
    sup = np.max(np.abs(u.frames), axis=1)
    lo, hi = fit_window[0] * u.dt, fit_window[1] * T
    sel = (t >= lo) & (t <= hi)
    slope, r2 = loglog_fit(t[sel], sup[sel])
    # alpha-modulus over coarse pairs
    idx = np.unique(np.geomspace(1, M, 24).astype(int))
    pairs = [(float(t[i]), float(t[j])) for i, j in combinations(idx, 2)]
    mod = max(abs(sup[j] - sup[i]) / (t[j] - t[i]) ** 0.5 for i, j in combinations(idx, 2))
    zt = float(np.max(sup[1:] / t[1:] ** 0.5))
    extra = {"alpha": alpha, "error_l2": err, "relative_error": err / st_l2_norm(exact),
             "fit_window": [lo, hi], "T": T, "M": M, "n": n, "path": path.meta}
    return HolderReport(slope, r2, float(mod), zt, (0,), {"kind": "none"}, u.dt, pairs, extra)


def half_modulus_closed_form(alpha: float, T: float, M: int) -> float:
    """``sup |U(t2) - U(t1)| / |t2 - t1|^(1/2)`` of ``t^alpha e^-t`` over grid pairs."""
    t = np.arange(M + 1) * (T / M)
    v = t ** alpha * np.exp(-t)
    d = np.abs(v[:, None] - v[None, :])
    gap = np.abs(t[:, None] - t[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(gap > 0, d / np.sqrt(gap), 0.0)
    return float(q.max())


# Hölder modulus -------------------------------------------------------------------------

def derivative_values(lattice: Lattice, values: np.ndarray, alpha_idx, order: int = 2) -> np.ndarray:
    """Cartesian ``d^alpha`` by composed centered differences."""
    v = values.reshape(lattice.shape3)
    for k, m in enumerate(alpha_idx):
        for _ in range(m):
            v = partial_values(lattice, np.ascontiguousarray(v), k, order)
    return v.reshape(lattice.shape)


INCREMENT_GAPS = (1, 2, 4, 8, 16)


def _holder_one(args):
    spec_name, n, box, T, dt_ladder, nu, pieces, seed, derivs, zr = args
    spec = get_group(spec_name)
    lat = Lattice((box,) * spec.N, (n,) * spec.N)
    half = min(lat.box)
    zeta = CutoffFunction(spec, zr[0] * half, zr[1] * half).on(lat).values
    rng = np.random.default_rng(seed)
    path = random_coefficient_path(spec.q, nu, pieces, seed, T=T)
    g = GridFunction(lat, CutoffFunction(spec, 0.5 * half, 0.8 * half).on(lat).values
                     * gaussian([0.5] * spec.N, rng.uniform(-0.2, 0.2, spec.N))(lat.points))
    F = SeparableForcing([(smooth_time_profile(omega=rng.uniform(1, 6), phase=rng.uniform(0, 6)), g)])
    dtc = max(dt_ladder)
    Mc = round(T / dtc)
    tc = np.arange(Mc + 1) * dtc
    out = []
    for dt in dt_ladder:
        u = solve(spec, SolverConfig(dt=dt, T=T), path, F, lat)
        r = round(dtc / dt)
        for a in derivs:
            d = np.stack([derivative_values(lat, u.frames[j * r], a) * zeta for j in range(Mc + 1)])
            sup = np.max(np.abs(d.reshape(Mc + 1, -1)), axis=1)
            mod = 0.0
            for i, j in combinations(range(1, Mc + 1), 2):
                mod = max(mod, float(np.max(np.abs(d[j] - d[i]))) / math.sqrt(tc[j] - tc[i]))
            zt = float(np.max(sup[1:] / np.sqrt(tc[1:])))
            fr = np.stack([derivative_values(lat, u.frames[k], a) * zeta for k in range(u.M + 1)])
            full = np.max(np.abs(fr.reshape(u.M + 1, -1)), axis=1)
            # increment exponent: worst increment at gap dt * 2^k against the gap
            gaps = [g for g in INCREMENT_GAPS if g <= u.M // 2]
            inc = [float(np.max(np.abs(fr[g:] - fr[:-g]))) for g in gaps]
            slope, r2 = (loglog_fit(np.asarray(gaps) * dt, inc) if len(gaps) >= 3 and min(inc) > 0
                         else (float("nan"), float("nan")))
            # zero-trace growth of sup |zeta d^a u(t)| over [4 dt, T/4] (informational)
            tt = u.times
            sel = (tt >= 4 * dt) & (tt <= T / 4)
            growth = (loglog_fit(tt[sel], full[sel])[0] if sel.sum() >= 3 and np.all(full[sel] > 0)
                      else float("nan"))
            out.append({"seed": seed, "dt": dt, "derivative": list(a), "modulus": mod, "zero_trace": zt,
                        "exponent": slope, "r2": r2, "growth_exponent": growth})
    return out


def run_holder_modulus(spec_name: str = "heis", n: int = 24, box: float = 2.0, T: float = 0.25,
                       dt_ladder=(1 / 64, 1 / 128, 1 / 256), nu: float = 0.25, paths: int = 20,
                       pieces: int = 16, seed: int = 0, derivatives=None, zeta_radii=(0.5, 0.7),
                       workers: int = 1) -> dict:
    """Half-Hölder time moduli of ``zeta d^alpha u`` across a dt ladder, maxed over rough paths."""
    spec = get_group(spec_name)
    if derivatives is None:
        N = spec.N
        eye = np.eye(N, dtype=int)
        derivatives = [tuple([0] * N)] + [tuple(map(int, e)) for e in eye] + [tuple(map(int, eye[i] + eye[j]))
                                                                     for i in range(N) for j in range(i, N)]
    dtc = max(dt_ladder)
    if abs(round(T / dtc) * dtc - T) > 1e-12 or any(abs(round(dtc / d) * d - dtc) > 1e-12 for d in dt_ladder):
        raise DomainError("dt ladder must nest and divide T")
    if round(T / dtc) % pieces and pieces % round(T / dtc):
        raise DomainError("path pieces must align with the coarsest time grid")
    args = [(spec_name, n, box, T, list(dt_ladder), nu, pieces, seed * 1000 + k, derivatives, zeta_radii)
            for k in range(paths)]
    rows = [r for chunk in pmap(_holder_one, args, workers) for r in chunk]
    reports = []
    for a in derivatives:
        for dt in dt_ladder:
            sel = [r for r in rows if tuple(r["derivative"]) == tuple(a) and r["dt"] == dt]
            reports.append(HolderReport(
                exponent=float(min(r["exponent"] for r in sel)),
                r2=float(min(r["r2"] for r in sel)),
                modulus=float(max(r["modulus"] for r in sel)),
                zero_trace=float(max(r["zero_trace"] for r in sel)),
                derivative=tuple(a),
                cutoff={"r0": zeta_radii[0], "r1": zeta_radii[1], "units": "box half-width"},
                dt=dt,
                pairs=[(i * dtc, j * dtc) for i, j in combinations(range(1, round(T / dtc) + 1), 2)],
                extra={"paths": paths, "n": n, "T": T, "exponent_fit": "increments at gaps dt*2^k, k<=4",
                       "min_growth_exponent": float(min(r["growth_exponent"] for r in sel))},
            ))
    return {"rows": rows, "reports": reports}


# Regularity transfer -----------------------------------------------------------------------

def _transfer_one(args):
    spec_name, n, box, T, M, nu, seed, k, zr, z1r = args
    spec = get_group(spec_name)
    lat = Lattice((box,) * spec.N, (n,) * spec.N)
    half = min(lat.box)
    rng = np.random.default_rng(seed)
    path = random_coefficient_path(spec.q, nu, M, seed, T=T)
    g = localized_field(spec, lat, rng, 0.2 * half, 0.8 * half, modes=2)
    F = SeparableForcing([(smooth_time_profile(omega=rng.uniform(1, 6), phase=rng.uniform(0, 6)), g)])
    u = solve(spec, SolverConfig(dt=T / M, T=T), path, F, lat)
    z = CutoffFunction(spec, zr[0] * half, zr[1] * half).on(lat).values
    z1 = CutoffFunction(spec, z1r[0] * half, z1r[1] * half).on(lat).values
    Fst = u.diagnostics["_fbar"]
    s = spec.s
    num = sobolev_norm("right", spec, k, u * z)
    den = sobolev_norm("right", spec, k + s - 1, Fst * z1) + st_l2_norm(u * z1)
    return {"seed": seed, "n": n, "num": num, "den": den, "ratio": num / den if den > 0 else 0.0}


def run_regularity_transfer(spec_name: str = "heis", k: int = 1, ladder=(16, 24, 32), box: float = 2.0,
                            T: float = 0.25, M: int = 16, nu: float = 0.25, trials: int = 10, seed: int = 0,
                            zeta_radii=(0.15, 0.3), zeta1_radii=(0.3, 0.7), workers: int = 1) -> dict:
    """``||zeta u||_{W^{k,2}_{X^R}} / (||zeta1 F||_{W^{k+s-1,2}_{X^R}} + ||zeta1 u||)`` per lattice."""
    if k not in (1, 2):
        raise DomainError(f"k must be 1 or 2, got {k}")
    args = [(spec_name, n, box, T, M, nu, seed * 1000 + t, k, zeta_radii, zeta1_radii)
            for n in ladder for t in range(trials)]
    rows = pmap(_transfer_one, args, workers)
    per_lattice = {n: max(r["ratio"] for r in rows if r["n"] == n) for n in ladder}
    return {"rows": rows, "max_ratio": per_lattice, "k": k,
            "zeta": list(zeta_radii), "zeta1": list(zeta1_radii)}


# Gain exponent ----------------------------------------------------------------------------

def run_gain_exponent(spec_name: str = "heis", n: int = 48, box: float = 2.0, samples: int = 10,
                      radii=(0.15, 0.6), n_radii: int = 8, seed: int = 0) -> list:
    """Per sample: log-log slopes of ``||Delta~_h u||`` along each coordinate, and the gain constant."""
    spec = get_group(spec_name)
    lat = Lattice((box,) * spec.N, (n,) * spec.N)
    rs = np.geomspace(radii[0], radii[1], n_radii)
    out = []
    for k in range(samples):
        rng = np.random.default_rng(seed * 1000 + k)
        u = localized_field(spec, lat, rng, 0.3, 0.9, modes=2)
        fits = gain_exponent(spec, u, rs, side="right")
        grad = horizontal_gradient_norm("left", spec, u)
        const = max(v / (nh ** (1.0 / spec.s) * grad) for f in fits for v, nh in zip(f.values, f.norms))
        out.append({"sample": k, "slopes": [f.slope for f in fits], "r2": [f.r2 for f in fits],
                    "min_slope": min(f.slope for f in fits), "gain_constant": const})
    return out
