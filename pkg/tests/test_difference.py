import csv
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot_heat.difference import (
    SEMINORM_COLUMNS, delta, delta_power, equivalence_ratio, gain_exponent, horizontal_gradient_norm,
    marchaud_ratio, seminorm, seminorm_rows_csv, sobolev_norm, sobolev_terms, t_grid,
)
from carnot_heat.errors import DomainError, SafeRegionError
from carnot_heat.group_core import exp_generator, get_group
from carnot_heat.lattice import CutoffFunction, GridFunction, Lattice, l2_norm
from carnot_heat.spacetime import SpaceTimeField, st_l2_norm, time_difference


def bump(spec, lat, r0=0.3, r1=0.9):
    return CutoffFunction(spec, r0, r1).on(lat) * GridFunction.from_callable(
        lat, lambda p: np.cos(p[..., 0] + 0.5 * p[..., -1]))


def test_constant_difference_is_zero(heis):
    lat = Lattice((2.0,) * 3, (8,) * 3)
    f = GridFunction.constant(lat, 1.0)
    d = delta("left", heis, [0.5, 0, 0], f, check_support=False)
    # zero extension: only points whose translate stays in the box are checked
    assert np.all(d.values[2:6, 2:6, 2:6] == 0.0)


def test_linear_difference_abelian(r1):
    lat = Lattice((2.0,), (16,))
    f = GridFunction.from_callable(lat, lambda p: p[..., 0])
    d = delta("left", r1, [0.3], f, check_support=False)
    np.testing.assert_allclose(d.values[:-3], 0.3, atol=1e-14)


def test_right_difference_of_x3(heis):
    # (h o x)_3 = x_3 + t x_2 / 2 for h = (t, 0, 0)
    lat = Lattice((2.0,) * 3, (16,) * 3)
    t = 0.3
    f = GridFunction.from_callable(lat, lambda p: p[..., 2])
    d = delta("right", heis, exp_generator(heis, 1, t), f, check_support=False)
    x2 = lat.points[..., 1]
    inner = (slice(2, 12),) * 3
    np.testing.assert_allclose(d.values[inner], (t * x2 / 2)[inner], atol=1e-13)


def test_second_difference_of_square(r1):
    lat = Lattice((2.0,), (32,))
    t = 2 * lat.h[0]  # on-grid translates: interpolation is exact
    f = GridFunction.from_callable(lat, lambda p: p[..., 0] ** 2)
    d = delta_power("left", r1, [t], 2, f, check_support=False)
    np.testing.assert_allclose(d.values[:-4], 2 * t ** 2, atol=1e-13)
    np.testing.assert_allclose(delta_power("left", r1, [t], 3, f, check_support=False).values[:-6], 0.0,
                               atol=1e-12)


def test_power_one_is_delta(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    f = bump(heis, lat)
    h = [0.1, 0.2, -0.05]
    np.testing.assert_array_equal(delta_power("right", heis, h, 1, f).values, delta("right", heis, h, f).values)
    with pytest.raises(DomainError):
        delta_power("right", heis, h, 0, f)


def test_safe_region(heis):
    lat = Lattice((2.0,) * 3, (16,) * 3)
    f = bump(heis, lat)
    with pytest.raises(SafeRegionError):
        delta("left", heis, [1.5, 0, 0], f)


def test_left_and_right_differences_commute(heis):
    # exact in the continuum; the defect is interpolation error and decays at second order
    h, k = exp_generator(heis, 1, 0.2), exp_generator(heis, 2, -0.3)
    defect = []
    for n in (32, 64):
        f = bump(heis, Lattice((2.0,) * 3, (n,) * 3), 0.2, 1.2)
        a = delta("left", heis, h, delta("right", heis, k, f))
        b = delta("right", heis, k, delta("left", heis, h, f))
        defect.append(l2_norm(a - b) / l2_norm(a))
    assert defect[0] / defect[1] > 3.0 and defect[1] < 0.03


def _st_bump(heis, n=16, M=4):
    lat = Lattice((2.0,) * 3, (n,) * 3)
    g = bump(heis, lat).values
    return SpaceTimeField.from_callable(lat, 0.1, M, lambda t, p: (1 + t) ** 2 * g)


def test_right_difference_commutes_with_time_difference(heis):
    u = _st_bump(heis)
    h = exp_generator(heis, 2, 0.25)
    a = time_difference(delta("right", heis, h, u))
    b = delta("right", heis, h, time_difference(u))
    np.testing.assert_allclose(a.frames, b.frames, atol=1e-14)


def test_seminorm_order_zero_is_l2(heis):
    u = _st_bump(heis)
    assert seminorm("left", heis, 0, None, u).value == st_l2_norm(u)


def test_seminorm_of_zero(heis):
    lat = Lattice((2.0,) * 3, (8,) * 3)
    assert seminorm("right", heis, 1, None, GridFunction.zeros(lat)).value == 0.0


@given(st.floats(-5, 5, allow_subnormal=False).filter(lambda c: abs(c) > 1e-6))
def test_seminorm_homogeneity(c):
    spec = get_group("heis")
    lat = Lattice((2.0,) * 3, (16,) * 3)
    f = bump(spec, lat, 0.3, 0.8)
    a = seminorm("right", spec, 1, 0.5, c * f, n_t=6).value
    b = seminorm("right", spec, 1, 0.5, f, n_t=6).value
    assert a == pytest.approx(abs(c) * b, rel=1e-12)


def test_seminorm_abelian_mean_value_oracle(r1):
    # f(t, x) = eta(t) sin(x) w(x) with a slowly varying window, so (sin w)' ~ cos w
    lat = Lattice((20.0,), (2048,))
    w = CutoffFunction(r1, 6.0, 16.0).on(lat).values
    x = lat.points[..., 0]
    M, dt = 8, 1.0 / 8
    eta = lambda t: 1.0 + t  # noqa: E731
    u = SpaceTimeField.from_callable(lat, dt, M, lambda t, p: eta(t) * np.sin(x) * w)
    eta_norm = np.sqrt(dt * sum(eta(n * dt) ** 2 for n in range(1, M + 1)))
    cos_w = l2_norm(GridFunction(lat, np.cos(x) * w))
    rep = seminorm("left", r1, 1, 1.0, u)
    assert rep.value == pytest.approx(eta_norm * cos_w, rel=0.10)
    assert rep.tmin_flag == bool(np.isclose(abs(rep.argmax_t), rep.t_grid[0]))


def test_seminorm_report_csv(heis):
    rep = seminorm("right", heis, 1, None, bump(heis, Lattice((2.0,) * 3, (16,) * 3)), n_t=5)
    rows = list(csv.DictReader(io.StringIO(seminorm_rows_csv([rep]))))
    assert tuple(rows[0]) == SEMINORM_COLUMNS
    assert float(rows[0]["value"]) == rep.value
    assert set(rep.to_dict()) >= {"t_grid", "skipped"}


def test_t_grid():
    lat = Lattice((2.0,), (16,))
    g = t_grid(lat, 40)
    assert len(g) == 40 and g[0] == pytest.approx(0.5) and g[-1] == pytest.approx(1.0)
    with pytest.raises(DomainError):
        t_grid(lat, 0)


def test_sobolev_norm_examples(r1, heis):
    lat = Lattice((4.0,), (256,))
    w = CutoffFunction(r1, 1.0, 2.5).on(lat).values
    x = lat.points[..., 0]
    u = GridFunction(lat, np.sin(x) * w)
    assert sobolev_norm("left", r1, 0, u) == l2_norm(u)
    # analytic derivative of sin(x) w(x) approximated by a fine spectral reference
    k = np.fft.fftfreq(256, d=lat.h[0]) * 2 * np.pi
    du = np.real(np.fft.ifft(1j * k * np.fft.fft(u.values)))
    assert sobolev_norm("left", r1, 1, u) == pytest.approx(l2_norm(u) + l2_norm(GridFunction(lat, du)), rel=1e-3)
    f = bump(heis, Lattice((2.0,) * 3, (16,) * 3))
    vals = [sobolev_norm("right", heis, k, f) for k in (0, 1, 2)]
    assert vals[0] <= vals[1] <= vals[2]
    assert len(sobolev_terms("right", heis, 2, f)) == 1 + 2 + 4


def test_equivalence_ratio_zero_convention(heis):
    z = GridFunction.zeros(Lattice((2.0,) * 3, (8,) * 3))
    er = equivalence_ratio("right", heis, 1, z)
    assert (er.seminorm_ratio, er.gradient_ratio, er.degenerate) == (0.0, 0.0, True)


def test_gradient_ratio_tends_to_one_abelian(r1):
    lat = Lattice((4.0,), (1024,))
    u = GridFunction(lat, np.sin(lat.points[..., 0]) * CutoffFunction(r1, 1.0, 2.5).on(lat).values)
    ratios = [equivalence_ratio("left", r1, 1, u, t_min=tm).gradient_ratio for tm in (0.2, 0.05, 0.0125)]
    assert abs(ratios[2] - 1) < abs(ratios[0] - 1)
    assert ratios[2] == pytest.approx(1.0, abs=2e-3)


def test_equivalence_ratios_bounded(heis):
    from carnot_heat.experiments.synthetic import localized_field
    lat = Lattice((2.0,) * 3, (16,) * 3)
    rng = np.random.default_rng(0)
    for _ in range(3):
        er = equivalence_ratio("right", heis, 1, localized_field(heis, lat, rng, 0.3, 0.9), n_t=10)
        assert 1 / 50 <= er.seminorm_ratio <= 50 and 1 / 50 <= er.gradient_ratio <= 50


def test_gain_exponent_heisenberg(heis):
    lat = Lattice((2.0,) * 3, (32,) * 3)
    u = bump(heis, lat)
    fits = gain_exponent(heis, u, np.geomspace(0.15, 0.6, 6))
    assert min(f.slope for f in fits) >= 0.45
    grad = horizontal_gradient_norm("left", heis, u)
    assert grad > 0


def test_marchaud_ratio_finite(heis):
    u = bump(heis, Lattice((2.0,) * 3, (32,) * 3))
    r = marchaud_ratio(heis, u, n_t=8)
    assert 0 < r < 50
