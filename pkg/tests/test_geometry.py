import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermobures.geometry import (DegenerateMetric, MetricField, NoLines, Polyline,
                                  ScanGrid, brioschi, constant_field,
                                  crossover_report, eigen_field,
                                  gaussian_curvature, ising_field,
                                  point_polyline_distance, polyline_slope,
                                  ridge_lines, ridge_nodes, scan, sphere_field,
                                  stencil_steps, zero_curvature_contours)
from thermobures.numerics import SymMat2


def _field(fn, domain=(-2.0, 2.0, 0.1, 3.0)):
    return MetricField(lambda h, T: SymMat2(*fn(h, T)), domain)


# ---- curvature --------------------------------------------------------------

@pytest.mark.parametrize("p", [(0.7, 1.0), (1.5, 0.5), (2.4, 1.7)])
def test_sphere_has_unit_curvature(p):
    assert gaussian_curvature(sphere_field(), p, 1e-4) == pytest.approx(1.0, abs=1e-5)


def test_hyperbolic_plane():
    # Poincare half-plane (dh^2 + dT^2)/T^2 has K = -1
    mf = _field(lambda h, T: (1 / T ** 2, 0.0, 1 / T ** 2))
    for p in [(0.0, 0.5), (1.0, 1.5)]:
        assert gaussian_curvature(mf, p, 1e-4) == pytest.approx(-1.0, abs=1e-5)


def test_polar_coordinates_are_flat():
    # dr^2 + r^2 dphi^2 with (h, T) = (phi, r): curvature 0 despite varying G
    mf = _field(lambda h, T: (T * T, 0.0, 1.0))
    assert abs(gaussian_curvature(mf, (0.3, 1.2), 1e-4)) < 1e-6


@given(st.floats(0.1, 10.0), st.floats(-0.9, 0.9), st.floats(0.1, 10.0))
@settings(max_examples=50, deadline=None)
def test_constant_metric_is_flat(a, r, c):
    g = SymMat2(a, r * math.sqrt(a * c), c)
    assert abs(gaussian_curvature(constant_field(g), (0.0, 0.5), 1e-4)) < 1e-6


@pytest.mark.parametrize("fn", [
    lambda h, T: (1.0, 0.0, math.sin(h) ** 2 + 0.1),
    lambda h, T: (1 + 0.3 * h * T, 0.1 * h, 2 + T * T),
    lambda h, T: (math.exp(h), 0.2 * math.sin(T), 1 + h * h),
])
def test_curvature_scaling(fn):
    mf = _field(fn)
    mf4 = _field(lambda h, T: tuple(4 * x for x in fn(h, T)))
    k = gaussian_curvature(mf, (0.4, 1.1), 1e-4)
    k4 = gaussian_curvature(mf4, (0.4, 1.1), 1e-4)
    assert k4 == pytest.approx(k / 4, rel=1e-6, abs=1e-9)


def test_cross_term_metric_matches_diagonalised_form():
    # g = J^T diag(1, sin^2 u) J for u = h + T, v = T: still the unit sphere
    def fn(h, T):
        s2 = math.sin(h + T) ** 2
        return (1.0, 1.0, 1.0 + s2)
    mf = _field(fn)
    assert gaussian_curvature(mf, (0.6, 0.5), 1e-4) == pytest.approx(1.0, abs=1e-5)


def test_degenerate_metric_raises():
    mf = constant_field(SymMat2(1.0, 1.0, 1.0))
    with pytest.raises(DegenerateMetric):
        gaussian_curvature(mf, (0.0, 0.5), 1e-4)


def test_point_too_close_to_boundary():
    with pytest.raises(ValueError):
        gaussian_curvature(sphere_field(), (0.3, 1.0), 1e-2)


def test_brioschi_split_E_equals_summed_E():
    rng = np.random.default_rng(0)
    E0 = 1 + 0.1 * rng.random((3, 3))
    E1 = 0.01 * rng.random((3, 3))
    F = 0.05 * rng.random((3, 3))
    G = 1 + 0.1 * rng.random((3, 3))
    assert brioschi((E0, E1), F, G, 1e-2) == pytest.approx(brioschi(E0 + E1, F, G, 1e-2),
                                                           rel=1e-10)


def test_stencil_steps_shrink_at_low_temperature():
    assert stencil_steps(1.0, 1e-4) == (1e-4, 1e-4)
    sh, sT = stencil_steps(0.02, 1e-4)
    assert sh == pytest.approx(1e-5) and sT == pytest.approx(1e-6)


def test_ising_curvature_step_independent_at_low_temperature():
    # quasi-classical corner: exponentially small g_TT
    mf = ising_field((1.0, 2.1, 0.01, 1.1))
    ks = [gaussian_curvature(mf, (1.3, 0.03), s) for s in (1e-4, 3e-5)]
    assert ks[0] < 0
    assert ks[0] == pytest.approx(ks[1], rel=0.02)


# ---- eigen field and scans --------------------------------------------------

def test_eigen_field_orientation_is_continuous():
    mf = ising_field((0.0, 3.0, 0.05, 2.0))
    sg = eigen_field(mf, np.linspace(0.2, 2.5, 12), np.linspace(0.1, 1.5, 5))
    for iT in range(sg.shape[0]):
        v = sg.v_max[iT]
        dots = np.einsum("ij,ij->i", v[1:], v[:-1])
        assert np.all(dots > 0)
    assert not sg.failures


def test_scan_records_and_boundary():
    sg = scan(sphere_field((0.0, math.pi, 0.1, 3.0)), np.linspace(0.5, 2.5, 4),
              np.linspace(0.5, 1.5, 3))
    recs = list(sg.records())
    assert len(recs) == 12
    # T-major: h runs fastest
    assert [r["T"] for r in recs[:4]] == [0.5] * 4
    assert [r["h"] for r in recs[:4]] == list(sg.h_axis)
    assert np.isnan(sg.curvature[0]).all() and np.isnan(sg.curvature[:, 0]).all()
    assert sg.curvature[1, 1] == pytest.approx(1.0, abs=1e-5)


def test_scan_marks_failed_nodes():
    def bad(h, T):
        if h > 0.9:
            raise ArithmeticError("boom")
        return SymMat2(1.0, 0.0, 1.0)
    sg = scan(MetricField(bad, (-1.0, 2.0, 0.1, 2.0)), np.linspace(0.0, 1.0, 3),
              np.linspace(0.5, 1.0, 3))
    failed = {k for k, v in sg.failures.items() if v.startswith("metric")}
    assert failed == {(0, 2), (1, 2), (2, 2)}
    assert np.isnan(sg.g[:, 2]).all()


def test_scan_grid_axis_validation():
    with pytest.raises(ValueError):
        ScanGrid.empty([0.0, 0.0], [0.1, 0.2])
    with pytest.raises(ValueError):
        ScanGrid.empty([0.0], [0.1, 0.2])


# ---- contours ---------------------------------------------------------------

def _grid_with(values_fn, hs, Ts):
    sg = ScanGrid.empty(hs, Ts)
    H, T = np.meshgrid(sg.h_axis, sg.T_axis)
    sg.curvature[:] = values_fn(H, T)
    return sg


def test_contour_of_linear_field_is_exact():
    hs = np.linspace(0.0, 1.0, 11)
    Ts = np.linspace(0.0, 1.0, 13)
    sg = _grid_with(lambda H, T: T - 0.4 * H - 0.25, hs, Ts)
    lines = zero_curvature_contours(sg)
    assert len(lines) == 1
    p = lines[0].points
    np.testing.assert_allclose(p[:, 1], 0.4 * p[:, 0] + 0.25, atol=1e-12)
    assert polyline_slope(lines[0]) == pytest.approx(0.4, rel=1e-10)
    assert p[:, 0].min() == pytest.approx(0.0) and p[:, 0].max() == pytest.approx(1.0)


def test_contour_through_grid_nodes_has_no_duplicates():
    hs = Ts = np.linspace(0.0, 1.0, 11)
    sg = _grid_with(lambda H, T: T - H, hs, Ts)
    lines = zero_curvature_contours(sg)
    assert len(lines) == 1
    p = lines[0].points
    np.testing.assert_allclose(p[:, 0], p[:, 1], atol=1e-12)
    assert np.all(np.linalg.norm(np.diff(p, axis=0), axis=1) > 1e-14)


def test_circle_contour_is_closed():
    hs = Ts = np.linspace(-1.0, 1.0, 41)
    sg = _grid_with(lambda H, T: H ** 2 + T ** 2 - 0.5 ** 2, hs, Ts)
    lines = zero_curvature_contours(sg)
    assert len(lines) == 1
    p = lines[0].points
    assert np.allclose(p[0], p[-1])
    r = np.linalg.norm(p, axis=1)
    assert np.max(np.abs(r - 0.5)) < 0.01


def test_saddle_cell_resolution():
    # K = h*T with a saddle at the cell centre: two crossing-free branches
    hs = Ts = np.array([-1.0, 1.0])
    sg = _grid_with(lambda H, T: H * T + 0.1, hs, Ts)
    lines = zero_curvature_contours(sg)
    assert len(lines) == 2
    # centre value is positive, so the positive corners stay connected:
    # each branch cuts off one negative corner
    for ln in lines:
        assert len(ln) == 2


def test_contours_skip_missing_values():
    hs = Ts = np.linspace(0.0, 1.0, 6)
    sg = _grid_with(lambda H, T: T - H + 0.05, hs, Ts)
    sg.curvature[0, :] = np.nan
    lines = zero_curvature_contours(sg)
    for ln in lines:
        assert ln.points[:, 1].min() >= Ts[1] - 1e-12


def test_contour_tracks_zero_set():
    # K sampled at contour points (bilinear) stays within the interpolation error
    hs = np.linspace(0.0, 2.0, 41)
    Ts = np.linspace(0.0, 1.0, 21)
    f = lambda H, T: T - 0.3 * np.sin(2 * H) - 0.4  # noqa: E731
    sg = _grid_with(f, hs, Ts)
    (line,) = zero_curvature_contours(sg)
    dh, dT = hs[1] - hs[0], Ts[1] - Ts[0]
    bound = 0.5 * (1.2 * dh ** 2 + 0.0 * dT ** 2)  # |K''| h^2/8 style bound, generous
    assert np.max(np.abs(f(line.points[:, 0], line.points[:, 1]))) < bound


# ---- ridges and crossover report -------------------------------------------

def _ridge_grid(hs, Ts, centre):
    sg = ScanGrid.empty(hs, Ts)
    H, T = np.meshgrid(sg.h_axis, sg.T_axis)
    # lambda_max peaks along h = centre(T); v_min points along h
    sg.lambda_max[:] = np.exp(-((H - centre(T)) / 0.1) ** 2)
    sg.v_min[:] = np.array([1.0, 0.0])
    sg.v_max[:] = np.array([0.0, 1.0])
    return sg


def test_ridge_detection_on_planted_ridge():
    hs = np.linspace(0.0, 2.0, 41)
    Ts = np.linspace(0.0, 1.0, 21)
    sg = _ridge_grid(hs, Ts, lambda T: 1.0 + 0.0 * T)
    mask = ridge_nodes(sg)
    assert mask[1:-1, 20].all() and mask.sum() == len(Ts) - 2
    (line,) = ridge_lines(sg)
    np.testing.assert_allclose(line.points[:, 0], 1.0)


def test_crossover_report_planted_distance():
    ridge = Polyline(np.column_stack([np.full(20, 1.3), np.linspace(0.1, 0.9, 20)]), "ridge")
    contour = Polyline(np.column_stack([np.full(30, 1.0), np.linspace(0.0, 1.0, 30)]),
                       "zero-curvature")
    rep = crossover_report(ridges=[ridge], contours=[contour])
    assert rep.mean_distance == pytest.approx(0.3, abs=1e-12)
    assert rep.ridge_sizes == (20,)


def test_crossover_report_without_lines():
    with pytest.raises(NoLines):
        crossover_report(ridges=[], contours=[])


def test_point_polyline_distance():
    ln = Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), "x")
    assert point_polyline_distance([0.5, 0.5], ln) == pytest.approx(0.5)
    assert point_polyline_distance([2.0, 2.0], ln) == pytest.approx(math.sqrt(2))
    assert point_polyline_distance([-1.0, 0.0], ln) == pytest.approx(1.0)


def test_flat_field_has_no_lines():
    sg = scan(constant_field(SymMat2(1.0, 0.2, 2.0), (-1.0, 2.0, 0.01, 2.0)),
              np.linspace(0.0, 1.0, 6), np.linspace(0.1, 1.0, 6))
    assert not ridge_lines(sg)
    assert np.nanmax(np.abs(sg.curvature)) < 1e-6
    with pytest.raises(NoLines):
        crossover_report(sg)
