import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blaschke.convex_body import make_geodesic_sphere, make_revolution_body
from blaschke.errors import DomainError
from blaschke.horoball import (
    BusemannRay,
    busemann_by_limit,
    busemann_closed_form,
    check_horoball_regime,
    export_level_sets,
    horocycle,
    verify_horoball_rolling,
)
from blaschke.model_space import ModelSpace


def unit_ray(c=-1.0, m=2):
    sp = ModelSpace(c, m)
    o = sp.origin()
    return BusemannRay(sp, o, sp.tangent_basis(o)[0])


def points_near(ray, n, rng, radius=3.0):
    sp = ray.space
    dirs = rng.normal(size=(n, sp.m))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    v = (rng.uniform(0, radius, n)[:, None] * dirs) @ sp.tangent_basis(ray.base)
    return sp.exp(np.broadcast_to(ray.base, v.shape), v)


class TestBusemann:
    def test_values(self):
        ray = unit_ray()
        assert busemann_closed_form(ray, ray.base) == pytest.approx(0.0, abs=1e-12)
        assert busemann_closed_form(ray, ray.point(2.0)) == pytest.approx(2.0, abs=1e-12)
        e = ray.space.tangent_basis(ray.base)[1]
        q = ray.space.exp(ray.base, e)
        assert busemann_closed_form(ray, q) == pytest.approx(-math.log(math.cosh(1.0)), abs=1e-12)
        assert busemann_closed_form(ray, q) == pytest.approx(-0.43378, abs=1e-5)

    @pytest.mark.parametrize("c", [-1.0, -0.25, -4.0])
    def test_null_vector(self, c):
        ray = unit_ray(c, 3)
        assert abs(float(ray.space.inner(ray.xi, ray.xi))) < 1e-10

    @pytest.mark.parametrize("c,m", [(-1.0, 2), (-0.25, 3)])
    def test_limit_agreement(self, c, m, rng):
        ray = unit_ray(c, m)
        Q = points_near(ray, 100, rng)
        closed = busemann_closed_form(ray, Q)
        limit = np.array([busemann_by_limit(ray, q, 30.0).value for q in Q])
        assert np.max(np.abs(closed - limit)) < 1e-6

    def test_exponential_convergence(self, rng):
        ray = unit_ray()
        q = points_near(ray, 1, rng, 1.0)[0]
        exact = float(busemann_closed_form(ray, q))
        err5 = abs(busemann_by_limit(ray, q, 5.0).value - exact)
        err30 = abs(busemann_by_limit(ray, q, 30.0).value - exact)
        assert err5 < 10 * math.exp(-5.0)
        assert err30 < 1e-12
        vals = busemann_by_limit(ray, q, 30.0).values
        assert np.all(np.diff(vals) >= -1e-12)

    @given(seed=st.integers(0, 10_000))
    def test_lipschitz(self, seed):
        rng = np.random.default_rng(seed)
        ray = unit_ray(-1.0, 3)
        A, B = points_near(ray, 20, rng), points_near(ray, 20, rng)
        gap = np.abs(busemann_closed_form(ray, A) - busemann_closed_form(ray, B))
        assert np.all(gap <= ray.space.distance(A, B) + 1e-9)

    def test_requires_negative_curvature(self):
        with pytest.raises(DomainError, match="Busemann requires negative curvature"):
            BusemannRay(ModelSpace(1.0, 2), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))


class TestHoroballRolling:
    @pytest.mark.parametrize("r", [0.5, 1.0, 5.0])
    def test_circles(self, r):
        body = make_geodesic_sphere(-1.0, 2, r, resolution=256)
        lam = 1 / math.tanh(r)
        fwd = verify_horoball_rolling(body, lam, np.arange(0, 256, 16))
        assert all(x.passed for x in fwd)
        assert max(abs(x.b_seed) for x in fwd) < 1e-8
        assert all(x.argmin_index == x.seed_index or x.min_b > -1e-9 for x in fwd)
        rev = verify_horoball_rolling(body, lam, np.arange(0, 256, 16), reverse=True)
        assert max(x.min_b for x in rev) < -1e-2

    def test_margin_shrinks_with_radius(self):
        # at a fixed arclength from the seed, b decreases toward 0 as the
        # circle approaches a horocycle
        vals = []
        for r in (0.5, 1.0, 5.0):
            body = make_geodesic_sphere(-1.0, 2, r, resolution=256)
            res = verify_horoball_rolling(body, 1 / math.tanh(r), [0])[0]
            assert res.passed
            s0 = body.points()[0]
            ray = BusemannRay(body.space, s0, body.space.log(s0, body.witness))
            q = body.chart(np.array([[0.5 / math.sinh(r)]]))
            vals.append(float(busemann_closed_form(ray, q)[0]))
        assert vals[0] > vals[1] > vals[2] > 0
        assert vals[2] < 0.2

    def test_revolution_body(self):
        body = make_revolution_body(-1.0, {"kind": "cosine", "r0": 0.8, "eps": 0.05, "k": 2}, 3, 24)
        assert all(x.passed for x in verify_horoball_rolling(body, 1.05))

    def test_regime(self):
        with pytest.raises(DomainError, match="horoball constraints violated"):
            check_horoball_regime(-1.0, 0.9)
        with pytest.raises(DomainError):
            check_horoball_regime(0.0, 2.0)


class TestHorocycle:
    def test_level(self):
        ray = unit_ray(-0.5)
        pts = horocycle(ray, 0.7, 2.0, 65)
        ray.space.check_point(pts, 1e-10)
        np.testing.assert_allclose(busemann_closed_form(ray, pts), 0.7, atol=1e-10)

    def test_export(self, tmp_path):
        export_level_sets(unit_ray(), [0.0, 1.0], tmp_path / "l.csv", n=9)
        lines = (tmp_path / "l.csv").read_text().splitlines()
        assert lines[0] == "level,index,x0,x1,x2" and len(lines) == 19
