import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot_heat.errors import CFLError, DimensionError, DomainError
from carnot_heat.lattice import GridFunction, Lattice
from carnot_heat.solver import (
    CoefficientPath, FunctionForcing, SeparableForcing, SolverConfig, TimeProfile, ZeroForcing,
    cfl_limit, constant_path, energy_estimate_check, energy_identity_residual, export_trajectory,
    load_trajectory, manufactured_forcing, random_coefficient_path, random_spd, solve, step,
    weak_residual,
)
from carnot_heat.spacetime import st_l2_norm


def sin_r1(n=32):
    lat = Lattice((np.pi,), (n,))
    return lat, np.sin(lat.points[..., 0])


def smooth_heis_forcing(lat):
    g = np.exp(-np.sum(lat.points ** 2 / 0.2, axis=-1)) * (1 + lat.points[..., 0])
    return SeparableForcing([(TimeProfile(lambda t: 1 + np.sin(3 * t), lambda t: t - np.cos(3 * t) / 3), g)])


# Coefficient paths --------------------------------------------------------------

def test_unit_ellipticity_gives_identity():
    p = random_coefficient_path(2, 1.0, 8, seed=0)
    np.testing.assert_array_equal(p.matrices, np.broadcast_to(np.eye(2), (8, 2, 2)))


def test_scalar_path_in_range():
    p = random_coefficient_path(1, 0.25, 64, seed=3)
    assert np.all((p.matrices >= 0.25) & (p.matrices <= 4.0))


def test_random_spd_spectrum(rng):
    ev = np.array([np.linalg.eigvalsh(random_spd(2, 0.3, rng)) for _ in range(1000)])
    assert ev.min() >= 0.3 - 1e-12 and ev.max() <= 1 / 0.3 + 1e-12


@given(st.integers(0, 10_000), st.floats(0.05, 1.0))
def test_random_path_is_valid(seed, nu):
    p = random_coefficient_path(2, nu, 4, seed)
    ev = np.linalg.eigvalsh(p.matrices)
    assert ev.min() >= nu * (1 - 1e-12) and ev.max() <= (1 + 1e-12) / nu
    np.testing.assert_allclose(p.matrices, p.matrices.transpose(0, 2, 1))


def test_random_path_is_seeded():
    a = random_coefficient_path(2, 0.25, 8, seed=5)
    b = random_coefficient_path(2, 0.25, 8, seed=5)
    np.testing.assert_array_equal(a.matrices, b.matrices)


@pytest.mark.parametrize("kwargs", [
    dict(breakpoints=[0.0, 1.0], matrices=[[[1.0, 0.5], [0.0, 1.0]]], nu=0.5),
    dict(breakpoints=[0.0, 1.0], matrices=[[[10.0]]], nu=0.5),
    dict(breakpoints=[0.1, 1.0], matrices=[[[1.0]]], nu=0.5),
    dict(breakpoints=[0.0, 1.0, 1.0], matrices=[[[1.0]], [[1.0]]], nu=0.5),
    dict(breakpoints=[0.0, 1.0], matrices=[[[1.0]]], nu=0.0),
])
def test_path_validation(kwargs):
    with pytest.raises((DomainError, DimensionError)):
        CoefficientPath(np.asarray(kwargs["breakpoints"]), np.asarray(kwargs["matrices"]), kwargs["nu"])


def test_path_integral_and_lookup():
    p = CoefficientPath(np.array([0.0, 0.5, 1.0]), np.array([[[1.0]], [[3.0]]]), 1 / 3)
    assert p.at(0.25)[0, 0] == 1.0 and p.at(0.5)[0, 0] == 3.0 and p.at(1.0)[0, 0] == 3.0
    assert p.integral(0.75)[0, 0] == pytest.approx(0.5 + 0.75)
    assert p.integral(2.0)[0, 0] == pytest.approx(2.0)


def test_snap_moves_breakpoints_to_grid():
    p = CoefficientPath(np.array([0.0, 0.33, 0.36, 1.0]), np.array([[[1.0]], [[2.0]], [[1.5]]]), 0.5)
    s = p.snap(0.1)
    np.testing.assert_allclose(s.breakpoints, [0.0, 0.3, 0.4, 1.0])
    assert s.meta["snap_shift"] == pytest.approx(0.04)
    # a piece shorter than dt/2 collapses
    c = p.snap(0.5)
    np.testing.assert_allclose(c.breakpoints, [0.0, 0.5, 1.0])
    assert [m[0, 0] for m in c.matrices] == [1.0, 1.5]
    with pytest.raises(DomainError):
        p.snap(5.0)


def test_constant_path_infers_nu():
    p = constant_path(np.diag([0.5, 2.0]), 1.0)
    assert p.nu == pytest.approx(0.5)


# Forcing -------------------------------------------------------------------------

def test_step_mean_exact_for_polynomial_in_time():
    lat = Lattice((1.0,), (8,))
    F = FunctionForcing(lambda t, p: t ** 5 + 0 * p[..., 0])
    m = F.step_mean(0.2, 0.6, lat)
    np.testing.assert_allclose(m, (0.6 ** 6 - 0.2 ** 6) / 6 / 0.4, rtol=1e-13)


def test_time_profile_mean_by_quadrature_handles_singularity():
    prof = TimeProfile(lambda t: t ** -0.5)
    assert prof.mean(0.0, 0.04) == pytest.approx(2 * 0.2 / 0.04, rel=1e-9)


# Solver --------------------------------------------------------------------------

def test_zero_forcing_gives_zero(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    cfg = SolverConfig(dt=0.05, T=0.2)
    u = solve(heis, cfg, random_coefficient_path(2, 0.25, 4, 0, 0.2), ZeroForcing(), lat)
    assert np.all(u.frames == 0.0)
    assert u.diagnostics["cg_iterations"] == [0] * 4


def test_implicit_matches_discrete_closed_form(r1):
    # u_t = c u_xx + sin x: each mode is a scalar recursion with the discrete symbol lam
    lat, s = sin_r1(32)
    c, dt, M = 0.7, 0.01, 40
    h = lat.h[0]
    lam = (np.sin(h) / h) ** 2
    F = SeparableForcing([(TimeProfile(lambda t: -1.0, lambda t: -t), s)])
    u = solve(r1, SolverConfig(dt=dt, T=dt * M), constant_path(c, dt * M, nu=0.7), F, lat)
    for n in (1, 10, 40):
        amp = (1 - (1 + dt * c * lam) ** (-n)) / (c * lam)
        np.testing.assert_allclose(u.frames[n], amp * s, atol=1e-10)


def test_explicit_single_step(r1):
    lat, s = sin_r1(64)
    h = lat.h[0]
    lam = (np.sin(h) / h) ** 2
    cfg = SolverConfig(dt=1e-3, T=1e-3, scheme="explicit")
    out = step(r1, cfg, constant_path(1.0, 1.0), GridFunction(lat, s), 0.0, ZeroForcing())
    np.testing.assert_allclose(out.values, (1 - 1e-3 * lam) * s, atol=1e-14)


def test_explicit_cfl_error(r1):
    lat, _ = sin_r1(64)
    path = constant_path(1.0, 1.0)
    cfg = SolverConfig(dt=0.5, T=1.0, scheme="explicit")
    assert cfl_limit(r1, lat, path, cfg) < 0.5
    with pytest.raises(CFLError):
        solve(r1, cfg, path, ZeroForcing(), lat)


def test_explicit_below_cfl_is_stable(r1):
    lat, s = sin_r1(32)
    path = constant_path(1.0, 1.0)
    dt = 0.9 * cfl_limit(r1, lat, path, SolverConfig(dt=0.01, T=1.0, scheme="explicit"))
    M = int(0.5 / dt)
    cfg = SolverConfig(dt=dt, T=dt * M, scheme="explicit")
    F = FunctionForcing(lambda t, p: -np.sin(p[..., 0]) * (t < 0.1))
    u = solve(r1, cfg, path, F, lat)
    peaks = np.max(np.abs(u.frames), axis=1)
    k = int(np.ceil(0.1 / dt)) + 1
    # once the forcing stops, the sup norm never grows
    assert np.all(np.diff(peaks[k:]) <= 1e-14)


def test_solve_rejects_mismatches(heis, r1):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    with pytest.raises(DimensionError):
        solve(r1, SolverConfig(0.1, 0.2), constant_path(1.0, 0.2), ZeroForcing(), lat)
    with pytest.raises(DimensionError):
        solve(heis, SolverConfig(0.1, 0.2), constant_path(1.0, 0.2), ZeroForcing(), lat)
    with pytest.raises(DomainError):
        solve(heis, SolverConfig(0.1, 0.4), constant_path(np.eye(2), 0.2), ZeroForcing(), lat)
    with pytest.raises(DomainError):
        SolverConfig(dt=0.3, T=1.0)


def test_manufactured_solution_first_order_in_time(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    g = GridFunction.from_callable(lat, lambda p: np.exp(-np.sum(p ** 2, axis=-1) / 0.3))
    T = 0.2
    path = random_coefficient_path(2, 0.5, 4, seed=1, T=T)
    F = manufactured_forcing(heis, path, g)
    errs = []
    for dt in (T / 8, T / 16, T / 32):
        u = solve(heis, SolverConfig(dt=dt, T=T), path, F, lat)
        errs.append(np.max(np.abs(u.frames[-1] - T * g.values)))
    r = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(r > 0.85) and np.all(r < 1.3)


def test_energy_identity_defect_is_telescoping_term(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    T, dt = 0.2, 0.02
    path = random_coefficient_path(2, 0.25, 8, seed=2, T=T)
    F = smooth_heis_forcing(lat)
    cfg = SolverConfig(dt=dt, T=T)
    u = solve(heis, cfg, path, F, lat)
    e = energy_identity_residual(heis, path, u, F, cfg)
    jump = 0.5 * np.sum(np.diff(u.frames, axis=0) ** 2) * lat.cell_volume
    assert e.residual == pytest.approx(jump, rel=1e-6)
    assert e.lhs >= e.final + e.quad_form
    assert e.quad_form >= e.nu_grad2


def test_energy_estimate_ratio_below_one(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    T = 0.2
    path = random_coefficient_path(2, 0.25, 16, seed=4, T=T)
    F = smooth_heis_forcing(lat)
    cfg = SolverConfig(dt=0.0125, T=T)
    chk = energy_estimate_check(heis, path, solve(heis, cfg, path, F, lat), F, cfg)
    assert not chk.degenerate
    assert 0 < chk.ratio <= 1.0


def test_energy_estimate_degenerate_flag(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    cfg = SolverConfig(dt=0.1, T=0.2)
    path = constant_path(np.eye(2), 0.2)
    chk = energy_estimate_check(heis, path, solve(heis, cfg, path, ZeroForcing(), lat), ZeroForcing(), cfg)
    assert chk.degenerate and chk.ratio == 0.0


def test_inner_solve_residual_recorded(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    cfg = SolverConfig(dt=0.05, T=0.1)
    path = constant_path(np.eye(2), 0.1)
    u = solve(heis, cfg, path, smooth_heis_forcing(lat), lat)
    assert max(u.diagnostics["cg_residuals"]) < cfg.residual_tol
    assert max(u.diagnostics["strong_residual"]) < 1e-6


def test_weak_residual_converges_in_space(heis):
    # at fixed dt the weak defect is spatial truncation of the stencil, O(h^2)
    T = 0.2
    path = constant_path(np.eye(2), T)
    cfg = SolverConfig(dt=T / 16, T=T)
    res = []
    for n in (16, 32):
        lat = Lattice((2.0,) * 3, (n,) * 3)
        F = smooth_heis_forcing(lat)
        res.append(weak_residual(heis, path, solve(heis, cfg, path, F, lat), F, cfg)["max_relative"])
    assert res[1] < 0.02
    assert res[0] / res[1] > 3.0


def test_trajectory_round_trip(heis, tmp_path):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    cfg = SolverConfig(dt=0.05, T=0.1)
    path = constant_path(np.eye(2), 0.1)
    u = solve(heis, cfg, path, smooth_heis_forcing(lat), lat)
    export_trajectory(u, tmp_path, path, seed=7)
    assert sorted(p.name for p in tmp_path.iterdir())[-1] == "manifest.json"
    v = load_trajectory(tmp_path)
    np.testing.assert_array_equal(u.frames, v.frames)
    assert v.dt == u.dt and v.lattice == u.lattice
    assert st_l2_norm(v) == st_l2_norm(u)
