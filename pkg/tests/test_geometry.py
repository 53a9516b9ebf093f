"""Tests for boundary regions, face minimisation and level-set meshes."""

import math

import numpy as np
import pytest

from utils.gauge import GaussianGauge, IndependenceGauge, TriangleGauge, Vine3Gauge
from utils.geometry import (
    DegenerateGaugeError,
    Face,
    RegionError,
    build_B1_C_delta,
    build_B_omega,
    build_min_face,
    level_set_boundary,
    minimize,
    simplex_grid,
)


def _face_values(g, face, axes):
    mesh = np.meshgrid(*axes, indexing='ij')
    free = np.stack([m.ravel() for m in mesh], axis=1)
    return free, g(face.point(free))


def brute_force_min(g, region, points=201, zooms=2):
    """
    Minimum over a dense grid of every face (free coordinates capped at 4).

    Bivariate faces use a 201-point grid zoomed twice around its best point,
    trivariate faces a single 61 x 61 grid.
    """
    best = math.inf
    for face in region.faces:
        bounds = [(lo, min(hi, 4.0)) for lo, hi in face.bounds]
        if g.dim > 2:
            _, values = _face_values(g, face, [np.linspace(lo, hi, 61) for lo, hi in bounds])
            best = min(best, float(np.min(values)))
            continue
        (floor, ceiling), = bounds
        lo, hi = floor, ceiling
        for _ in range(zooms + 1):
            axis = np.linspace(lo, hi, points)
            free, values = _face_values(g, face, [axis])
            k = int(np.argmin(values))
            best = min(best, float(values[k]))
            step = axis[1] - axis[0]
            lo, hi = max(floor, free[k, 0] - step), min(ceiling, free[k, 0] + step)
    return best


class TestRegions:

    def test_b_omega_layout(self):
        region = build_B_omega([0.2, 0.8])
        assert region.label == 'B_omega'
        first, second = region.faces
        assert (first.pinned_index, first.pinned_value) == (0, 0.25)
        assert first.bounds == ((1.0, math.inf),)
        assert (second.pinned_index, second.pinned_value) == (1, 1.0)
        assert second.bounds == ((0.25, math.inf),)

    def test_b1_layout_in_three_dimensions(self):
        region = build_B1_C_delta([2, 0], 0.2, 3, upper=3.0)
        assert region.label == 'B1_C_delta'
        assert region.params == {'C': [0, 2], 'delta': 0.2}
        first, second = region.faces
        assert first.pinned_index == 0 and first.pinned_value == 1.0
        assert first.bounds == ((0.0, 0.2), (1.0, 3.0))
        assert second.pinned_index == 2
        assert second.bounds == ((1.0, 3.0), (0.0, 0.2))

    def test_b1_single_coordinate(self):
        region = build_B1_C_delta([0], 0.5, 2)
        assert len(region.faces) == 1
        assert region.faces[0].bounds == ((0.0, 0.5),)

    def test_min_face_label(self):
        region = build_min_face(3)
        assert region.label == 'min_face'
        assert len(region.faces) == 3
        assert all(face.bounds == ((1.0, math.inf), (1.0, math.inf)) for face in region.faces)

    def test_face_point_embedding(self):
        face = Face(3, 1, 0.5, ((0.0, 1.0), (0.0, 1.0)))
        np.testing.assert_array_equal(face.point([0.2, 0.7]), [0.2, 0.5, 0.7])

    @pytest.mark.parametrize('kwargs', [
        dict(subset=[0], delta=1.5, dim=2),
        dict(subset=[], delta=0.5, dim=2),
        dict(subset=[2], delta=0.5, dim=2),
        dict(subset=[0], delta=0.5, dim=2, upper=0.5),
    ])
    def test_invalid_b1(self, kwargs):
        with pytest.raises(RegionError):
            build_B1_C_delta(**kwargs)

    def test_omega_off_simplex(self):
        with pytest.raises(RegionError, match="simplex"):
            build_B_omega([0.5, 0.6])

    def test_dimension_mismatch(self):
        with pytest.raises(RegionError):
            minimize(IndependenceGauge(3), build_min_face(2))


class TestMinimize:

    def test_gaussian_min_face(self):
        result = minimize(GaussianGauge.from_rho(0.5), build_min_face(2))
        assert result.value == pytest.approx(4.0 / 3.0, abs=1e-9)
        np.testing.assert_allclose(result.argmin, [1.0, 1.0], atol=1e-6)

    def test_triangle_min_face(self):
        assert minimize(TriangleGauge(0.5), build_min_face(2)).value == pytest.approx(4.0 / 3.0, abs=1e-9)

    def test_independence_faces_tie(self):
        result = minimize(IndependenceGauge(2), build_B_omega([0.3, 0.7]))
        assert result.value == pytest.approx(10.0 / 7.0, abs=1e-9)
        assert result.tied and result.tied_faces == (0, 1)
        assert result.face_index == 0
        np.testing.assert_allclose(result.argmin, [3.0 / 7.0, 1.0], atol=1e-9)

    @pytest.mark.parametrize('name', ['gaussian_rho05', 'logistic_gp', 'inverted_logistic',
                                      'inverted_husler_reiss', 'mixture_vi', 'triangle_iv'])
    def test_never_worse_than_grid(self, name, catalog):
        g = catalog[name]
        for region in (build_B_omega([0.35, 0.65]), build_B1_C_delta([0], 0.4, 2), build_min_face(2)):
            result = minimize(g, region)
            brute = brute_force_min(g, region)
            assert result.value <= brute + 1e-10
            assert result.value == pytest.approx(brute, rel=1e-4)

    def test_three_dimensional_faces(self, catalog):
        for name in ('gaussian3', 'vine3'):
            g = catalog[name]
            region = build_B1_C_delta([0, 1], 0.5, 3)
            assert minimize(g, region).value <= brute_force_min(g, region) + 1e-12

    def test_monotone_in_delta(self, catalog):
        g = catalog['gaussian_rho05']
        values = [minimize(g, build_B1_C_delta([0], delta, 2)).value for delta in np.linspace(0, 1, 11)]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_truncation_does_not_change_minimum(self, catalog):
        g = catalog['gaussian_rho05']
        free = minimize(g, build_B_omega([0.4, 0.6])).value
        capped = minimize(g, build_B_omega([0.4, 0.6], upper=10.0)).value
        assert free == pytest.approx(capped, abs=1e-10)

    @pytest.mark.parametrize('name', ['gaussian_rho05', 'inverted_logistic', 'triangle_iv', 'mixture_vi'])
    @pytest.mark.parametrize('bound', [2.0, 5.0])
    def test_doubling_truncation_bound(self, name, bound, catalog):
        g = catalog[name]
        for build in (lambda upper: build_B_omega([0.3, 0.7], upper=upper),
                      lambda upper: build_B1_C_delta([0], 0.4, 2, upper=upper)):
            assert abs(minimize(g, build(bound)).value - minimize(g, build(2 * bound)).value) < 1e-8

    def test_degenerate_gauge(self, catalog):
        g = catalog['husler_reiss_gp']
        region = build_B1_C_delta([0], 0.5, 2)
        with pytest.raises(DegenerateGaugeError):
            minimize(g, region)
        assert math.isinf(minimize(g, region, allow_infinite=True).value)

    def test_extended_valued_min_face(self, catalog):
        assert minimize(catalog['husler_reiss_gp'], build_min_face(2)).value == pytest.approx(1.0)

    def test_workers_do_not_change_result(self):
        g = Vine3Gauge(1.0, 1.0)
        region = build_B1_C_delta([0, 2], 0.3, 3)
        assert minimize(g, region, workers=1) == minimize(g, region, workers=2)


class TestLevelSet:

    def test_simplex_grid_counts(self):
        points, triangles = simplex_grid(3, 10)
        assert len(points) == 66
        assert len(triangles) == 100
        np.testing.assert_allclose(points.sum(axis=1), 1.0)

    @pytest.mark.parametrize('name', ['gaussian_rho05', 'triangle_v', 'vine3', 'gaussian3'])
    def test_vertices_on_level_set(self, name, catalog):
        g = catalog[name]
        mesh = level_set_boundary(g, 30 if g.dim == 3 else None)
        np.testing.assert_allclose(g(mesh.vertices), 1.0, atol=1e-8)
        if g.dim == 2:
            assert len(mesh.vertices) == 400
            assert mesh.triangles is None
        else:
            assert mesh.triangles.max() < len(mesh.vertices)

    def test_extended_valued_keeps_diagonal(self, catalog):
        mesh = level_set_boundary(catalog['husler_reiss_gp'])
        np.testing.assert_allclose(mesh.vertices, 1.0)

    def test_unsupported_dimension(self):
        with pytest.raises(RegionError):
            level_set_boundary(IndependenceGauge(4))
