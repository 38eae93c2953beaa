import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blaschke.errors import CertificationError, DomainError, GeometryError
from blaschke.riemannian2d import (
    ChartMetric,
    GeodesicState,
    build_metric,
    certify_curvature,
    chart_distance,
    chart_distance_batch,
    chart_ellipse,
    christoffel,
    gaussian_curvature,
    geodesic_curvature,
    hyperbolic_chart,
    integrate_geodesic,
    metric_tensor,
    model_distance,
    perturbed_sphere_chart,
    sphere_chart,
    toponogov_check,
    verify_ball_rolling_2d,
)


def fd_only(metric: ChartMetric) -> ChartMetric:
    """Same metric with the analytic derivative removed."""
    return ChartMetric(metric.name, metric.g, metric.inside, metric.bounds, None,
                       metric.curvature, metric.embed, metric.model_c, metric.diameter_cap)


def disk_points(rng, n, radius):
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    t = rng.uniform(0, 2 * math.pi, n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def band_points(rng, n, center=(math.pi / 2, 0.0), spread=0.6):
    return np.asarray(center) + rng.uniform(-spread, spread, (n, 2))


class TestMetricOracles:
    def test_euclidean_christoffels_vanish(self, rng):
        G = christoffel(build_metric("euclidean"), rng.uniform(-3, 3, (20, 2)))
        assert np.max(np.abs(G)) == 0.0

    def test_revolution_christoffels(self, rng):
        eps = 0.1
        metric = perturbed_sphere_chart(eps)
        u = band_points(rng, 50)
        f = np.sin(u[:, 0]) + eps * np.sin(3 * u[:, 0])
        df = np.cos(u[:, 0]) + 3 * eps * np.cos(3 * u[:, 0])
        G = christoffel(metric, u)
        np.testing.assert_allclose(G[:, 0, 1, 1], -f * df, atol=1e-12)
        np.testing.assert_allclose(G[:, 1, 0, 1], df / f, atol=1e-12)
        np.testing.assert_allclose(G[:, 1, 1, 0], df / f, atol=1e-12)

    @pytest.mark.parametrize("name", ["sphere", "hyperbolic", "perturbed_sphere"])
    def test_finite_difference_christoffels(self, name, rng):
        metric = build_metric(name)
        u = band_points(rng, 40) if name == "perturbed_sphere" else disk_points(rng, 40, 0.8)
        np.testing.assert_allclose(christoffel(fd_only(metric), u), christoffel(metric, u), atol=1e-6)

    def test_sphere_curvature(self, rng):
        K = gaussian_curvature(sphere_chart(), disk_points(rng, 200, 1.8))
        np.testing.assert_allclose(K, 1.0, atol=1e-6)

    def test_hyperbolic_curvature(self, rng):
        K = gaussian_curvature(hyperbolic_chart(), disk_points(rng, 200, 0.85))
        np.testing.assert_allclose(K, -1.0, atol=1e-6)

    def test_revolution_curvature(self, rng):
        metric = perturbed_sphere_chart(0.1)
        u = band_points(rng, 200)
        np.testing.assert_allclose(gaussian_curvature(metric, u), metric.curvature(u), atol=1e-6)
        np.testing.assert_allclose(gaussian_curvature(fd_only(metric), u), metric.curvature(u), atol=1e-5)

    def test_singular_metric(self):
        bad = ChartMetric("bad", lambda u: np.zeros((len(u), 2, 2)), lambda u: np.ones(len(u), bool), ())
        with pytest.raises(GeometryError, match="singular metric"):
            metric_tensor(bad, [[0.0, 0.0]])

    def test_unknown_metric(self):
        with pytest.raises(DomainError):
            build_metric("torus")


class TestGeodesics:
    def test_speed_drift(self):
        metric = perturbed_sphere_chart()
        path = integrate_geodesic(metric, GeodesicState(np.array([1.2, -0.3]), np.array([0.6, 0.8])), 1.0)
        assert np.max(np.abs(path.speed(metric) - 1.0)) < 1e-8

    def test_euclidean_distance(self, rng):
        metric = build_metric("euclidean")
        A, B = rng.uniform(-1, 1, (10, 2)), rng.uniform(-1, 1, (10, 2))
        np.testing.assert_allclose(chart_distance_batch(metric, A, B), np.linalg.norm(A - B, axis=1), atol=1e-9)

    @pytest.mark.parametrize("name,radius", [("sphere", 0.9), ("hyperbolic", 0.6)])
    def test_model_distance(self, name, radius, rng):
        metric = build_metric(name)
        A, B = disk_points(rng, 50, radius), disk_points(rng, 50, radius)
        np.testing.assert_allclose(chart_distance_batch(metric, A, B), model_distance(metric, A, B), atol=1e-6)

    def test_meridians(self):
        metric = perturbed_sphere_chart()
        assert chart_distance(metric, [1.0, 0.3], [2.0, 0.3]) == pytest.approx(1.0, abs=1e-8)

    @given(seed=st.integers(0, 10_000))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        metric = perturbed_sphere_chart()
        a, b = band_points(rng, 2, spread=0.4)
        assert chart_distance(metric, a, b) == pytest.approx(chart_distance(metric, b, a), abs=2e-8)

    def test_path_csv(self, tmp_path):
        metric = sphere_chart()
        path = integrate_geodesic(metric, GeodesicState(np.zeros(2), np.array([1.0, 0.0])), 0.5, 0.1)
        path.to_csv(tmp_path / "g.csv")
        assert len((tmp_path / "g.csv").read_text().splitlines()) == len(path.s) + 1


class TestGeodesicCurvature:
    def test_geodesic_is_straight(self):
        metric = perturbed_sphere_chart()
        step = 1e-2
        path = integrate_geodesic(metric, GeodesicState(np.array([1.3, 0.0]), np.array([1.0, 1.0])), 1.0, step)
        kg = geodesic_curvature(metric, path.u, periodic=False, h=step)
        assert np.nanmax(np.abs(kg)) < 1e-5

    def test_euclidean_circle(self):
        kg = geodesic_curvature(build_metric("euclidean"), chart_ellipse((0.5, -0.2), (1.0, 1.0), 256))
        np.testing.assert_allclose(kg, 1.0, atol=1e-5)

    def test_hyperbolic_circle(self):
        rho = math.tanh(0.5)
        kg = geodesic_curvature(hyperbolic_chart(), chart_ellipse((0.0, 0.0), (rho, rho), 256))
        np.testing.assert_allclose(kg, 1 / math.tanh(1.0), atol=1e-4)


class TestToponogov:
    def test_self_comparison(self, rng):
        metric = sphere_chart()
        for _ in range(5):
            rep = toponogov_check(metric, 1.0, disk_points(rng, 3, 0.5))
            assert abs(rep.margin) < 1e-6

    def test_smaller_model_curvature(self, rng):
        metric = sphere_chart()
        rep = toponogov_check(metric, 0.5, np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]]))
        assert rep.margin > 0

    def test_revolution_triangles(self, rng):
        metric = perturbed_sphere_chart(0.01)
        for _ in range(10):
            tri = band_points(rng, 1, spread=0.2) + rng.uniform(-0.2, 0.2, (3, 2))
            assert toponogov_check(metric, 0.8, tri).passed

    def test_hypothesis_gate(self):
        with pytest.raises(CertificationError, match="hypothesis sec >= c violated on region"):
            toponogov_check(sphere_chart(), 1.1, [[0, 0], [0.3, 0], [0, 0.3]])


class TestRolling2D:
    def test_sphere_circle(self):
        r = 0.5
        rho = math.tan(r / 2)
        curve = chart_ellipse((0.0, 0.0), (rho, rho), 128)
        rep = verify_ball_rolling_2d(sphere_chart(), 1.0, curve, 1 / math.tan(r) - 1e-5, seeds=[0, 32])
        assert rep.passed
        assert abs(rep.min_margin) < 1e-4

    def test_overstated_curvature_refused(self):
        curve = chart_ellipse((math.pi / 2, 0.0), (0.3, 0.4), 128)
        with pytest.raises(CertificationError):
            verify_ball_rolling_2d(perturbed_sphere_chart(), 1.1, curve, 1.5, seeds=[0])

    def test_uncertified_curve_refused(self):
        curve = chart_ellipse((0.0, 0.0), (0.3, 0.3), 128)
        with pytest.raises(CertificationError, match="curve not certified"):
            verify_ball_rolling_2d(sphere_chart(), 1.0, curve, 10.0, seeds=[0])

    def test_curvature_certificate(self):
        cert = certify_curvature(perturbed_sphere_chart(), 0.9, ((math.pi / 2 - 0.5, math.pi / 2 + 0.5), (-0.5, 0.5)))
        assert cert.passed and 0.9 <= cert.min_K and cert.max_K <= 1.1
