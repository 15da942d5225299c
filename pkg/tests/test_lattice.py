import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot_heat.errors import AliasingError, DimensionError, DomainError, ResolutionError
from carnot_heat.fields import FieldOperator
from carnot_heat.group_core import get_group, hom_norm
from carnot_heat.lattice import (
    CutoffFunction, GridFunction, Lattice, Mollifier, group_convolve, integrate, l2_norm, left_translate,
    load_grid, lp_norm, mollifier, mollify, precedes, right_translate, save_grid,
)


def test_lattice_geometry():
    lat = Lattice((1.0, 2.0), (8, 16))
    assert lat.h == (0.25, 0.25)
    assert lat.shape == (8, 16)
    assert lat.volume == pytest.approx(8.0)
    assert lat.points[0, 0].tolist() == [-1.0, -2.0]
    with pytest.raises(DomainError):
        Lattice((1.0,), (4,))
    with pytest.raises(DimensionError):
        Lattice((1.0, 1.0), (8, 8, 8))


def test_grid_function_is_immutable():
    f = GridFunction.zeros(Lattice((1.0,), (8,)))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_integrate_examples():
    lat = Lattice((np.pi, 2.0), (32, 16))
    assert integrate(GridFunction.constant(lat, 1.0)) == pytest.approx(lat.volume, rel=1e-14)
    assert abs(integrate(GridFunction.from_callable(lat, lambda p: np.sin(p[..., 0])))) < 1e-12


def test_gaussian_quadrature_matches_closed_form():
    # int_{R^2} exp(-|x|^2) = pi; tails beyond the box are below 1e-13
    lat = Lattice((6.0, 6.0), (48, 48))
    f = GridFunction.from_callable(lat, lambda p: np.exp(-np.sum(p ** 2, axis=-1)))
    assert integrate(f) == pytest.approx(np.pi, abs=1e-6)


def test_trig_quadrature_exact():
    lat = Lattice((np.pi,), (16,))
    f = GridFunction.from_callable(lat, lambda p: np.cos(3 * p[..., 0]) ** 2)
    assert integrate(f) == pytest.approx(np.pi, abs=1e-13)


def test_norms():
    lat = Lattice((1.0, 1.0), (16, 16))
    z = GridFunction.zeros(lat)
    assert l2_norm(z) == 0.0
    one = GridFunction.constant(lat, 1.0)
    for p in (1, 2, 3.5):
        assert lp_norm(one, p) == pytest.approx(lat.volume ** (1 / p))
    with pytest.raises(DomainError):
        lp_norm(one, 0.5)


@given(st.floats(-10, 10, allow_subnormal=False))
def test_norm_scaling(c):
    lat = Lattice((1.0,), (16,))
    f = GridFunction.from_callable(lat, lambda p: np.cos(p[..., 0]))
    assert l2_norm(c * f) == pytest.approx(abs(c) * l2_norm(f), rel=1e-12, abs=1e-100)


def test_cutoff_properties(heis):
    lat = Lattice((2.0,) * 3, (24,) * 3)
    z0 = CutoffFunction(heis, 0.5, 0.7).on(lat)
    z1 = CutoffFunction(heis, 0.8, 1.2).on(lat)
    assert precedes(z0, z1)
    assert not precedes(z1, z0)
    v = z0.values
    assert v.min() >= 0 and v.max() <= 1
    r = hom_norm(heis, lat.points, "smooth")
    assert np.all(v[r <= 0.5] == 1.0) and np.all(v[r >= 0.7] == 0.0)
    with pytest.raises(DomainError):
        CutoffFunction(heis, 0.7, 0.5)


def test_save_load_grid(tmp_path, rng):
    lat = Lattice((1.0, 2.0), (8, 12))
    f = GridFunction(lat, rng.standard_normal(lat.shape))
    bin_path, hdr = save_grid(f, tmp_path / "g")
    assert bin_path.stat().st_size == 8 * 8 * 12
    g = load_grid(tmp_path / "g")
    assert g.lattice == lat
    np.testing.assert_array_equal(g.values, f.values)


# Convolution and mollifiers ------------------------------------------------------------

@pytest.mark.parametrize("name", ["r1", "r2", "heis"])
def test_mollifier_mass_and_support(name):
    spec = get_group(name)
    lat = Lattice((2.0,) * spec.N, (48,) * spec.N)
    eps = 1.0
    phi = mollifier(spec, eps, lat)
    assert integrate(phi) == pytest.approx(1.0, abs=1e-3)
    outside = hom_norm(spec, lat.points) > eps
    assert np.all(phi.values[outside] == 0.0)


def test_mollifier_peak_scales_with_q(heis):
    lat = Lattice((2.0,) * 3, (32,) * 3)
    peaks = [mollifier(heis, e, lat).values.max() for e in (0.5, 1.0)]
    # both kernels peak at the origin, a lattice point
    assert peaks[0] / peaks[1] == pytest.approx(2.0 ** heis.Q, rel=1e-12)


def test_mollifier_resolution_rejected(heis):
    with pytest.raises(ResolutionError):
        mollifier(heis, 0.1, Lattice((2.0,) * 3, (16,) * 3))


@pytest.mark.parametrize("name", ["r1", "r2", "heis"])
def test_mollify_constant(name):
    spec = get_group(name)
    lat = Lattice((2.0,) * spec.N, (16,) * (spec.N - 1) + (32,))
    u = GridFunction.constant(lat, 2.5)
    for method in ("interp", "auto"):
        out = Mollifier(spec, 0.6, lat, method=method)(u, check_support=False)
        np.testing.assert_allclose(out.values, 2.5, rtol=1e-12)


def test_aliasing_rejected(heis):
    lat = Lattice((2.0,) * 3, (16, 16, 32))
    u = GridFunction.from_callable(lat, lambda p: np.exp(-np.sum(p ** 2, axis=-1)))
    with pytest.raises(AliasingError):
        mollify(heis, 0.6, u)


def test_abelian_convolution_matches_direct_sum(r1):
    lat = Lattice((4.0,), (64,))
    phi = GridFunction.from_callable(lat, lambda p: np.maximum(0, 1 - np.abs(p[..., 0]) / 0.5))
    u = GridFunction.from_callable(lat, lambda p: np.exp(-4 * p[..., 0] ** 2))
    # x_k - y_j sits at index k - j + n/2 (mod n) because the lattice starts at -n/2 cells
    n = lat.n[0]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :] + n // 2) % n
    direct = (u.values[idx] @ phi.values) * lat.h[0]
    for method in ("interp", "fourier"):
        np.testing.assert_allclose(group_convolve(r1, phi, u, method=method).values, direct, atol=1e-13)


def test_fourier_matches_interp_on_abelian(r2, rng):
    lat = Lattice((3.0, 3.0), (32, 32))
    u = CutoffFunction(r2, 0.8, 1.4).on(lat) * GridFunction(lat, rng.standard_normal(lat.shape))
    mf = Mollifier(r2, 0.5, lat, method="fourier")(u)
    mi = Mollifier(r2, 0.5, lat, method="interp")(u)
    np.testing.assert_allclose(mf.values, mi.values, atol=1e-13)


def _bump(heis, lat):
    return CutoffFunction(heis, 0.3, 0.8).on(lat) * GridFunction.from_callable(
        lat, lambda p: np.cos(p[..., 0] + 0.5 * p[..., 2]))


def test_mollify_converges_to_data(heis):
    lat = Lattice((2.0,) * 3, (32, 32, 64))
    u = _bump(heis, lat)
    errs = [l2_norm(mollify(heis, e, u) - u) for e in (0.7, 0.6, 0.5, 0.4)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_left_field_commutes_with_convolution(heis):
    # X_i(phi * u) = phi * (X_i u) for left-invariant X_i; defect shrinks under refinement
    res = []
    for n in (16, 32):
        lat = Lattice((2.0,) * 3, (n, n, 2 * n))
        u = _bump(heis, lat)
        mol = Mollifier(heis, 0.6, lat)
        for i in (1, 2):
            X = FieldOperator(heis, "left", i)
            res.append(l2_norm(X(mol(u)) - mol(X(u), check_support=False)))
    coarse, fine = max(res[:2]), max(res[2:])
    assert coarse / fine > 3.0


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_convolution_linearity(a, b):
    spec = get_group("r1")
    lat = Lattice((3.0,), (32,))
    f = GridFunction.from_callable(lat, lambda p: np.exp(-4 * p[..., 0] ** 2))
    g = GridFunction.from_callable(lat, lambda p: p[..., 0] * np.exp(-4 * p[..., 0] ** 2))
    mol = Mollifier(spec, 0.5, lat)
    lhs = mol(a * f + b * g, check_support=False)
    rhs = a * mol(f, check_support=False) + b * mol(g, check_support=False)
    np.testing.assert_allclose(lhs.values, rhs.values, atol=1e-12)


def test_young_inequality_l1(heis, rng):
    lat = Lattice((2.0,) * 3, (16, 16, 32))
    u = CutoffFunction(heis, 0.3, 0.8).on(lat) * GridFunction(lat, rng.standard_normal(lat.shape))
    mol = Mollifier(heis, 0.6, lat)
    assert lp_norm(mol(u), 1) <= lp_norm(mol.kernel, 1) * lp_norm(u, 1) * (1 + 1e-3)


def test_translations_commute(heis):
    lat = Lattice((2.0,) * 3, (24,) * 3)
    f = _bump(heis, lat)
    y, z = np.array([0.2, -0.1, 0.05]), np.array([-0.15, 0.25, 0.1])
    a = left_translate(heis, right_translate(heis, f, z), y)
    b = right_translate(heis, left_translate(heis, f, y), z)
    assert l2_norm(a - b) < 0.05 * l2_norm(f)
