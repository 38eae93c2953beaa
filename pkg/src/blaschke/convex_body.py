"""Parametric hypersurfaces in M(c) and their extrinsic curvature.

A body is represented by its boundary chart ``u -> X(u)`` from a parameter
domain U in R^{m-1} into the ambient embedding of M(c), together with a
quadrature grid over U and an interior witness point that fixes the inward
orientation. Derivative oracles are analytic when the generator knows them
and central finite differences otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import fsolve

from .errors import DomainError, GeometryError, ImmersionError
from .model_space import ModelSpace, characteristic_radius, cs, ct, sn

FD_STEP = 1e-4
EMBED_TOL = 1e-8

ChartFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BodySpec:
    """Boundary chart of a body in M^m(c) plus its sampling grid.

    ``chart(u)`` maps an array of parameters of shape ``(k, m-1)`` to points
    of shape ``(k, n)``; ``d1``/``d2`` (optional) return shapes
    ``(k, m-1, n)`` and ``(k, m-1, m-1, n)``.
    """

    space: ModelSpace
    chart: ChartFn
    grid: np.ndarray
    weights: np.ndarray
    witness: np.ndarray
    d1: Optional[ChartFn] = None
    d2: Optional[ChartFn] = None
    periods: tuple = ()
    bounds: np.ndarray = None
    grid_shape: tuple = ()
    generator: str = "custom"
    params: dict = field(default_factory=dict)
    resolution: int = 0
    h: float = FD_STEP

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def c(self) -> float:
        return self.space.c

    def points(self, u=None) -> np.ndarray:
        u = self.grid if u is None else _as_params(u, self.m)
        return self.chart(u)

    def wrap(self, u: np.ndarray) -> np.ndarray:
        """Reduce periodic parameters into their fundamental domain."""
        u = np.array(u, dtype=float)
        for i, per in enumerate(self.periods):
            if per:
                u[..., i] = np.mod(u[..., i], per)
        return u

    def in_domain(self, u) -> bool:
        u = np.atleast_2d(u)
        for i, per in enumerate(self.periods):
            if per:
                continue
            lo, hi = self.bounds[i]
            if np.any(u[:, i] <= lo) or np.any(u[:, i] >= hi):
                return False
        return True

    def with_resolution(self, n: int) -> "BodySpec":
        if self.generator not in GENERATORS:
            raise DomainError(f"cannot regrid a {self.generator!r} body")
        return build_body(self.generator, {**self.params, "resolution": n})

    def describe(self) -> dict:
        return {"generator": self.generator, "params": dict(self.params)}


def _as_params(u, m: int) -> np.ndarray:
    return np.asarray(u, dtype=float).reshape(-1, m - 1)


# -- derivative oracles --------------------------------------------------------

def chart_d1(body: BodySpec, u) -> np.ndarray:
    u = _as_params(u, body.m)
    if body.d1 is not None:
        return body.d1(u)
    h = body.h
    out = []
    for i in range(body.m - 1):
        e = np.zeros(body.m - 1)
        e[i] = h
        out.append((body.chart(u + e) - body.chart(u - e)) / (2 * h))
    return np.stack(out, axis=1)


def chart_d2(body: BodySpec, u) -> np.ndarray:
    u = _as_params(u, body.m)
    if body.d2 is not None:
        return body.d2(u)
    h = body.h
    k = body.m - 1
    x0 = body.chart(u)
    out = np.empty((u.shape[0], k, k, x0.shape[-1]))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h
        out[:, i, i] = (body.chart(u + ei) - 2 * x0 + body.chart(u - ei)) / h**2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = h
            v = (
                body.chart(u + ei + ej) - body.chart(u + ei - ej)
                - body.chart(u - ei + ej) + body.chart(u - ei - ej)
            ) / (4 * h * h)
            out[:, i, j] = v
            out[:, j, i] = v
    return out


def _null_vector(rows: np.ndarray) -> np.ndarray:
    """Generalized cross product: a vector annihilated by each row.

    ``rows`` has shape ``(k, n-1, n)``.
    """
    n = rows.shape[-1]
    out = np.empty(rows.shape[:-2] + (n,))
    for j in range(n):
        minor = np.delete(rows, j, axis=-1)
        out[..., j] = (-1) ** j * np.linalg.det(minor) if n > 1 else 1.0
    return out


class LocalGeometry(NamedTuple):
    """Extrinsic data of the boundary at a batch of parameters."""

    u: np.ndarray
    X: np.ndarray          # (k, n) points
    dX: np.ndarray         # (k, m-1, n) chart tangents
    nu: np.ndarray         # (k, n) unit inward normal
    G: np.ndarray          # (k, m-1, m-1) first fundamental form
    B: np.ndarray          # (k, m-1, m-1) second fundamental form
    kappas: np.ndarray     # (k, m-1) principal curvatures, ascending


def _check_immersion(G: np.ndarray) -> None:
    diag = np.diagonal(G, axis1=1, axis2=2)
    if np.any(diag <= 1e-300):
        raise ImmersionError("immersion failure")
    ratio = np.linalg.det(G) / np.prod(diag, axis=1)
    if np.any(ratio < 1e-12):
        raise ImmersionError("immersion failure")


def _inward_normals(body: BodySpec, X: np.ndarray, dX: np.ndarray) -> np.ndarray:
    sp = body.space
    diag = sp._metric_diag()
    vecs = dX if sp.sign == 0 else np.concatenate([X[:, None, :], dX], axis=1)
    n = sp.to_tangent(X, _null_vector(vecs * diag))
    nn = sp.norm(n)
    if np.any(nn == 0):
        raise ImmersionError("immersion failure")
    n = n / nn[:, None]
    # orientation probe: the inward normal points toward the witness
    toward = sp.log(X, np.broadcast_to(body.witness, X.shape))
    flip = sp.inner(n, toward) < 0
    n[flip] *= -1.0
    return n


class FirstOrder(NamedTuple):
    """Point, chart tangents, inward normal and metric, without curvature."""

    X: np.ndarray
    dX: np.ndarray
    nu: np.ndarray
    G: np.ndarray


def first_order_geometry(body: BodySpec, u=None) -> FirstOrder:
    u = body.grid if u is None else _as_params(u, body.m)
    X = body.chart(u)
    dX = chart_d1(body, u)
    G = body.space.inner(dX[:, :, None, :], dX[:, None, :, :])
    _check_immersion(G)
    return FirstOrder(X, dX, _inward_normals(body, X, dX), G)


def local_geometry(body: BodySpec, u=None) -> LocalGeometry:
    u = body.grid if u is None else _as_params(u, body.m)
    X = body.chart(u)
    dX = chart_d1(body, u)
    ddX = chart_d2(body, u)
    sp = body.space
    G = sp.inner(dX[:, :, None, :], dX[:, None, :, :])
    _check_immersion(G)
    nu = _inward_normals(body, X, dX)
    B = sp.inner(ddX, nu[:, None, None, :])
    B = 0.5 * (B + np.swapaxes(B, 1, 2))
    return LocalGeometry(u, X, dX, nu, G, B, _principal(G, B))


def _principal(G: np.ndarray, B: np.ndarray) -> np.ndarray:
    k = G.shape[-1]
    if k == 1:
        return B[:, :, 0] / G[:, :, 0]
    if k == 2:
        # whiten with the Cholesky factor of G; hypot keeps umbilics exact
        l11 = np.sqrt(G[:, 0, 0])
        l21 = G[:, 0, 1] / l11
        l22 = np.sqrt(G[:, 1, 1] - l21**2)
        Li = np.zeros_like(G)
        Li[:, 0, 0] = 1 / l11
        Li[:, 1, 0] = -l21 / (l11 * l22)
        Li[:, 1, 1] = 1 / l22
        S = np.einsum("kia,kab,kjb->kij", Li, B, Li)
        mean = 0.5 * (S[:, 0, 0] + S[:, 1, 1])
        disc = np.hypot(0.5 * (S[:, 0, 0] - S[:, 1, 1]), S[:, 0, 1])
        return np.stack([mean - disc, mean + disc], axis=1)
    import scipy.linalg
    return np.array([scipy.linalg.eigh(b, g, eigvals_only=True) for g, b in zip(G, B)])


# -- BodySpec-level operations -----------------------------------------------------

def unit_inward_normal(body: BodySpec, u) -> np.ndarray:
    return local_geometry(body, u).nu


def first_fundamental_form(body: BodySpec, u) -> np.ndarray:
    return local_geometry(body, u).G


def second_fundamental_form(body: BodySpec, u) -> np.ndarray:
    return local_geometry(body, u).B


def normal_curvature(body: BodySpec, u, w) -> np.ndarray:
    """Rayleigh quotient ``B(w, w) / G(w, w)`` for chart direction(s) ``w``."""
    geo = local_geometry(body, u)
    w = np.asarray(w, dtype=float).reshape(-1, body.m - 1)
    w = np.broadcast_to(w, (geo.G.shape[0], body.m - 1))
    den = np.einsum("ki,kij,kj->k", w, geo.G, w)
    if np.any(den <= 0):
        raise DomainError("normal curvature needs a nonzero direction")
    return np.einsum("ki,kij,kj->k", w, geo.B, w) / den


def principal_curvatures(body: BodySpec, u=None) -> np.ndarray:
    return local_geometry(body, u).kappas


@dataclass(frozen=True)
class CurvatureSample:
    point: np.ndarray
    inward_normal: np.ndarray
    shape_eigenvalues: np.ndarray

    @property
    def kappa_min(self) -> float:
        return float(np.min(self.shape_eigenvalues))


def curvature_sample(body: BodySpec, u) -> CurvatureSample:
    geo = local_geometry(body, u)
    return CurvatureSample(geo.X[0], geo.nu[0], geo.kappas[0])


@dataclass(frozen=True)
class ConvexityCertificate:
    lam: float
    tol: float
    min_kappa: float
    argmin_index: int
    argmin_param: tuple
    passed: bool

    @property
    def margin(self) -> float:
        return self.min_kappa - self.lam


def certify_lambda_convex(body: BodySpec, lam: float, tol: float = 1e-9) -> ConvexityCertificate:
    """Check ``kappa_min >= lam - tol`` at every grid point."""
    kmin = local_geometry(body).kappas[:, 0]
    i = int(np.argmin(kmin))
    return ConvexityCertificate(
        lam=float(lam), tol=float(tol), min_kappa=float(kmin[i]), argmin_index=i,
        argmin_param=tuple(float(x) for x in body.grid[i]),
        passed=bool(kmin[i] >= lam - tol),
    )


def boundary_measure_element(body: BodySpec, u=None) -> np.ndarray:
    """sqrt(det G) at the given parameters."""
    G = first_fundamental_form(body, body.grid if u is None else u)
    return np.sqrt(np.linalg.det(G))


def check_embedding(body: BodySpec, tol: float = EMBED_TOL) -> float:
    X = body.points()
    sp = body.space
    if sp.sign == 0:
        return 0.0
    resid = float(np.max(np.abs(sp.inner(X, X) * sp.c - 1.0)))
    if resid > tol:
        raise GeometryError(f"chart leaves the model space (residual {resid:.2e})")
    return resid


# -- grids ---------------------------------------------------------------------

def _periodic_grid(n: int, period: float = 2 * math.pi):
    u = np.arange(n) * (period / n)
    return u.reshape(-1, 1), np.full(n, period / n)


def _sphere_grid(n: int):
    """Gauss-Legendre in the polar angle times a uniform azimuthal grid."""
    x, wx = np.polynomial.legendre.leggauss(n)
    theta = (x + 1) * (math.pi / 2)
    wt = wx * (math.pi / 2)
    phi = np.arange(n) * (2 * math.pi / n)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(wt, np.full(n, 2 * math.pi / n))
    return np.stack([T.ravel(), P.ravel()], axis=1), W.ravel()


def _frame(sp: ModelSpace, center: np.ndarray) -> np.ndarray:
    return sp.tangent_basis(center)


def _directions(frame: np.ndarray, u: np.ndarray, m: int):
    """Unit directions E(u) in T_center and their first/second derivatives."""
    if m == 2:
        t = u[:, 0]
        c, s = np.cos(t), np.sin(t)
        E = c[:, None] * frame[0] + s[:, None] * frame[1]
        dE = (-s[:, None] * frame[0] + c[:, None] * frame[1])[:, None, :]
        ddE = (-E)[:, None, None, :]
        return E, dE, ddE
    th, ph = u[:, 0], u[:, 1]
    st, ct_, sp_, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    f0, f1, f2 = frame[0], frame[1], frame[2]
    E = (st * cp)[:, None] * f0 + (st * sp_)[:, None] * f1 + ct_[:, None] * f2
    Et = (ct_ * cp)[:, None] * f0 + (ct_ * sp_)[:, None] * f1 - st[:, None] * f2
    Ep = (-st * sp_)[:, None] * f0 + (st * cp)[:, None] * f1
    Ett = -E
    Etp = (-ct_ * sp_)[:, None] * f0 + (ct_ * cp)[:, None] * f1
    Epp = (-st * cp)[:, None] * f0 + (-st * sp_)[:, None] * f1
    dE = np.stack([Et, Ep], axis=1)
    ddE = np.stack([np.stack([Ett, Etp], axis=1), np.stack([Etp, Epp], axis=1)], axis=1)
    return E, dE, ddE


def _grid_for(m: int, resolution: int):
    if m == 2:
        g, w = _periodic_grid(resolution)
        return g, w, (2 * math.pi,), None, (resolution,)
    g, w = _sphere_grid(resolution)
    bounds = np.array([[0.0, math.pi], [-math.inf, math.inf]])
    return g, w, (0.0, 2 * math.pi), bounds, (resolution, resolution)


# -- generators ----------------------------------------------------------------

def make_geodesic_sphere(c: float, m: int = 2, r: float = 1.0, center=None,
                         resolution: int = 256) -> BodySpec:
    """Geodesic sphere of radius ``r`` (analytic derivatives)."""
    sp = ModelSpace(c, m)
    if m not in (2, 3):
        raise DomainError("sampled bodies support m in {2, 3}")
    if not r > 0 or (sp.sign > 0 and r >= math.pi / (2 * sp.kappa)):
        raise DomainError(f"infeasible sphere radius {r!r} for c={c!r}")
    center = sp.origin() if center is None else np.asarray(center, dtype=float)
    sp.check_point(center, 1e-10)
    frame = _frame(sp, center)
    a, b = float(cs(c, r)), float(sn(c, r))

    def chart(u):
        E, _, _ = _directions(frame, _as_params(u, m), m)
        return a * center + b * E

    def d1(u):
        return b * _directions(frame, _as_params(u, m), m)[1]

    def d2(u):
        return b * _directions(frame, _as_params(u, m), m)[2]

    g, w, periods, bounds, shape = _grid_for(m, resolution)
    return BodySpec(sp, chart, g, w, center, d1, d2, periods, bounds, shape,
                    "geodesic_sphere",
                    {"c": c, "m": m, "r": r, "center": center.tolist()},
                    resolution)


def _polar_chart(sp: ModelSpace, m: int, radial: Callable[[np.ndarray], np.ndarray]):
    """Chart ``u -> exp_o(radial(u))`` where ``radial`` returns components in
    the tangent frame at the origin."""
    o = sp.origin()
    frame = _frame(sp, o)

    def chart(u):
        v = radial(_as_params(u, m)) @ frame
        return sp.exp(np.broadcast_to(o, v.shape), v)

    return chart, o


def make_ellipse_like(c: float, axes, resolution: int = 256) -> BodySpec:
    """Ellipse (m=2) or ellipsoid (m=3) with semi-axes ``axes``.

    For ``c = 0`` this is the Euclidean quadric with analytic derivatives;
    otherwise the Euclidean quadric is drawn in the tangent space at the
    origin and pushed through the exponential map.
    """
    axes = np.asarray(axes, dtype=float)
    m = len(axes)
    if m not in (2, 3) or np.any(axes <= 0):
        raise DomainError(f"invalid axes {axes.tolist()}")
    sp = ModelSpace(c, m)
    if sp.sign > 0 and np.max(axes) >= math.pi / (2 * sp.kappa):
        raise DomainError("ellipse-like body too large for the sphere")
    g, w, periods, bounds, shape = _grid_for(m, resolution)
    eye = np.eye(m)
    params = {"c": c, "axes": axes.tolist()}

    if sp.sign == 0:
        def chart(u):
            return _directions(eye, _as_params(u, m), m)[0] * axes

        def d1(u):
            return _directions(eye, _as_params(u, m), m)[1] * axes

        def d2(u):
            return _directions(eye, _as_params(u, m), m)[2] * axes

        return BodySpec(sp, chart, g, w, np.zeros(m), d1, d2, periods, bounds, shape,
                        "ellipse_like", params, resolution)

    chart, o = _polar_chart(sp, m, lambda u: _directions(eye, u, m)[0] * axes)
    return BodySpec(sp, chart, g, w, o, None, None, periods, bounds, shape,
                    "ellipse_like", params, resolution)


def radial_profile(profile: dict) -> Callable[[np.ndarray], np.ndarray]:
    """Polar profile ``theta -> rho`` from a serializable description.

    Supported kinds: ``cosine`` with ``rho = r0 (1 + eps cos(k theta))``.
    """
    kind = profile.get("kind", "cosine")
    if kind != "cosine":
        raise DomainError(f"unknown profile kind {kind!r}")
    r0 = float(profile["r0"])
    eps = float(profile.get("eps", 0.0))
    k = int(profile.get("k", 2))
    if r0 <= 0 or abs(eps) >= 1:
        raise DomainError("profile radius must stay positive")
    return lambda th: r0 * (1.0 + eps * np.cos(k * th))


def make_revolution_body(c: float, profile, m: int = 2, resolution: int = 256) -> BodySpec:
    """Star-shaped body ``exp_o(rho(theta) E)`` with a polar profile.

    For m = 2, ``theta`` is the polar angle of the direction E; for m = 3,
    it is the angle from the symmetry axis and the body is rotationally
    symmetric about that axis.
    """
    sp = ModelSpace(c, m)
    if m not in (2, 3):
        raise DomainError("sampled bodies support m in {2, 3}")
    rho = profile if callable(profile) else radial_profile(profile)
    eye = np.eye(m)

    def radial(u):
        E = _directions(eye, u, m)[0]
        return rho(u[:, 0])[:, None] * E

    chart, o = _polar_chart(sp, m, radial)
    g, w, periods, bounds, shape = _grid_for(m, resolution)
    rmax = float(np.max(rho(g[:, 0])))
    if sp.sign > 0 and rmax >= math.pi / (2 * sp.kappa):
        raise DomainError("revolution body too large for the sphere")
    params = {"c": c, "m": m, "profile": profile if isinstance(profile, dict) else "callable"}
    return BodySpec(sp, chart, g, w, o, None, None, periods, bounds, shape,
                    "revolution_body", params, resolution)


# -- two-ball hull ---------------------------------------------------------------

@dataclass(frozen=True)
class HullGeometry:
    """Named landmarks of the two-ball hull construction."""

    radius: float
    half_separation: float
    waist: float            # distance from the origin to each flat side
    segment_half: float     # half-length of each flat side
    arc_start: float        # polar angle (at a ball center) of the tangency
    perimeter: float
    top_midpoint: np.ndarray
    centers: tuple


def _hull_landmarks(sp: ModelSpace, r: float, sep: float) -> HullGeometry:
    k = sp.kappa
    a = sep / 2.0
    if sp.sign < 0:
        h = math.asinh(math.sinh(k * r) / math.cosh(k * a)) / k
        ell = math.atanh(math.tanh(k * a) / math.cosh(k * h)) / k
    else:
        h, ell = r, a
    o = sp.origin()
    e1, e2 = sp.tangent_basis(o)[:2]
    o1 = sp.exp(o, -a * e1)
    o2 = sp.exp(o, a * e1)
    y0 = sp.exp(o, h * e2)
    foot = sp.exp(y0, -ell * e1)
    f1 = sp.log(o1, o)
    f1 = f1 / sp.norm(f1)
    f2 = e2
    v = sp.log(o1, foot)
    beta = math.atan2(float(sp.inner(v, f2)), float(sp.inner(v, f1)))
    arc = (2 * math.pi - 2 * beta) * float(sn(sp.c, r))
    return HullGeometry(r, a, h, ell, beta, 4 * ell + 2 * arc, y0, (o1, o2))


def make_two_ball_hull(c: float, r: float, separation: float, smoothing: float = 0.0,
                       resolution: int = 2048) -> BodySpec:
    """Boundary of the convex hull of two balls of radius ``r`` in M^2(c),
    c <= 0, whose centers are ``separation`` apart and symmetric about the
    origin.

    The boundary is parametrized by arclength, starting at the top midpoint
    and running counterclockwise: flat side, arc, flat side, arc. With
    ``smoothing = 0`` the curve is C^1 with curvature jumping between
    ``ct_c(r)`` and 0; a positive ``smoothing`` width replaces each jump by
    a quintic ramp and re-closes the curve, giving a C^2 boundary.
    """
    if c > 0:
        raise DomainError("two-ball hull is defined for c <= 0")
    if not r > 0 or not separation > 2 * r:
        raise DomainError("balls not disjoint")
    if smoothing < 0:
        raise DomainError("smoothing must be nonnegative")
    sp = ModelSpace(c, 2)
    geo = _hull_landmarks(sp, r, separation)
    params = {"c": c, "r": r, "separation": separation, "smoothing": smoothing}
    if smoothing > 0:
        chart, d1, d2, perimeter = _smoothed_hull(sp, geo, smoothing)
    else:
        chart, d1, d2 = _exact_hull(sp, geo)
        perimeter = geo.perimeter
    g, w = _periodic_grid(resolution, perimeter)
    return BodySpec(sp, chart, g, w, sp.origin(), d1, d2, (perimeter,), None,
                    (resolution,), "two_ball_hull", params, resolution)


def _exact_hull(sp: ModelSpace, geo: HullGeometry):
    c = sp.c
    o = sp.origin()
    e1, e2 = sp.tangent_basis(o)[:2]
    y0 = geo.top_midpoint
    mirror_x = np.eye(sp.ambient_dim)
    mirror_y = np.eye(sp.ambient_dim)
    ix = 0 if sp.sign == 0 else 1
    mirror_x[ix, ix] = -1.0
    mirror_y[ix + 1, ix + 1] = -1.0
    y1 = y0 @ mirror_y
    o1 = geo.centers[0]
    f1 = sp.log(o1, o)
    f1 = f1 / sp.norm(f1)
    f2 = e2
    ell = geo.segment_half
    rs = float(sn(c, geo.radius))
    rc = float(cs(c, geo.radius))
    A = (2 * math.pi - 2 * geo.arc_start) * rs
    bounds = np.cumsum([0.0, ell, A, 2 * ell, A, ell])
    P = bounds[-1]

    def seg(base, s):
        X = np.outer(cs(c, s), base) + np.outer(sn(c, s), e1)
        V = np.outer(-c * sn(c, s), base) + np.outer(cs(c, s), e1)
        return X, V, -c * X

    def arc(th):
        dirn = np.outer(np.cos(th), f1) + np.outer(np.sin(th), f2)
        X = rc * o1 + rs * dirn
        V = np.outer(-np.sin(th), f1) + np.outer(np.cos(th), f2)
        return X, V, -dirn / rs

    def evaluate(u):
        s = np.mod(_as_params(u, 2)[:, 0], P)
        n = sp.ambient_dim
        X = np.empty((len(s), n))
        V = np.empty_like(X)
        W = np.empty_like(X)
        piece = np.searchsorted(bounds, s, side="right") - 1
        piece = np.clip(piece, 0, 4)
        for k in range(5):
            sel = piece == k
            if not np.any(sel):
                continue
            t = s[sel] - bounds[k]
            if k == 0:
                x, v, w = seg(y0, -t)
                v = -v
            elif k == 1:
                x, v, w = arc(geo.arc_start + t / rs)
            elif k == 2:
                x, v, w = seg(y1, -ell + t)
            elif k == 3:
                x, v, w = arc(geo.arc_start + (A - t) / rs)
                x, v, w = x @ mirror_x, -(v @ mirror_x), w @ mirror_x
            else:
                x, v, w = seg(y0, ell - t)
                v = -v
            X[sel], V[sel], W[sel] = x, v, w
        return X, V, W

    return (
        lambda u: evaluate(u)[0],
        lambda u: evaluate(u)[1][:, None, :],
        lambda u: evaluate(u)[2][:, None, None, :],
    )


def _smoothstep5(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x * x)


def _smoothed_hull(sp: ModelSpace, geo: HullGeometry, width: float):
    """Quarter curve from the top midpoint to the x-axis with a C^2 curvature
    ramp, closed by solving for the ramp position and the quarter length."""
    c = sp.c
    lam = float(ct(c, geo.radius))
    o = sp.origin()
    e1, e2 = sp.tangent_basis(o)[:2]
    y0 = geo.top_midpoint
    N0 = sp.log(y0, o)
    N0 = N0 / sp.norm(N0)
    T0 = -e1
    n = sp.ambient_dim

    def kappa(s, start):
        return lam * _smoothstep5((s - start) / width + 0.5)

    def rhs(s, y, start):
        X, T, N = y[:n], y[n:2 * n], y[2 * n:]
        k = kappa(s, start)
        return np.concatenate([T, -c * X + k * N, -k * T])

    def shoot(z, dense=False):
        start, length = z
        sol = solve_ivp(rhs, (0.0, length), np.concatenate([y0, T0, N0]), args=(start,),
                        method="DOP853", rtol=1e-12, atol=1e-13, dense_output=dense)
        return sol

    ix = 0 if sp.sign == 0 else 1

    def residual(z):
        y = shoot(z).y[:, -1]
        X, T = y[:n], y[n:2 * n]
        return [X[ix + 1], T[ix]]

    quarter = geo.perimeter / 4
    z, info, ier, msg = fsolve(residual, [geo.segment_half, quarter], full_output=True, xtol=1e-13)
    if ier != 1:
        raise GeometryError(f"smoothed hull did not close: {msg}")
    start, Lq = float(z[0]), float(z[1])
    if start - width / 2 < 0:
        raise DomainError("smoothing width too large for the flat sides")
    sol = shoot(z, dense=True).sol
    P = 4 * Lq
    flip_x = np.ones(n)
    flip_x[ix] = -1.0
    flip_y = np.ones(n)
    flip_y[ix + 1] = -1.0

    def evaluate(u):
        s = np.mod(_as_params(u, 2)[:, 0], P)
        q = np.minimum((s // Lq).astype(int), 3)
        t = s - q * Lq
        local = np.where((q == 1) | (q == 3), Lq - t, t)
        Y = sol(local).T
        X, T, N = Y[:, :n], Y[:, n:2 * n], Y[:, 2 * n:]
        k = kappa(local, start)
        W = -c * X + k[:, None] * N
        sgnT = np.where((q == 1) | (q == 3), -1.0, 1.0)[:, None]
        T = T * sgnT
        fx = np.where(((q == 2) | (q == 3))[:, None], flip_x, 1.0)
        fy = np.where(((q == 1) | (q == 2))[:, None], flip_y, 1.0)
        f = fx * fy
        return X * f, T * f, W * f

    return (
        lambda u: evaluate(u)[0],
        lambda u: evaluate(u)[1][:, None, :],
        lambda u: evaluate(u)[2][:, None, None, :],
        P,
    )


def hull_landmarks(c: float, r: float, separation: float) -> HullGeometry:
    return _hull_landmarks(ModelSpace(c, 2), r, separation)


GENERATORS = {
    "geodesic_sphere": lambda c, m=2, r=1.0, center=None, resolution=256:
        make_geodesic_sphere(c, m, r, center, resolution),
    "ellipse_like": lambda c, axes, resolution=256: make_ellipse_like(c, axes, resolution),
    "revolution_body": lambda c, profile, m=2, resolution=256:
        make_revolution_body(c, profile, m, resolution),
    "two_ball_hull": lambda c, r, separation, smoothing=0.0, resolution=2048:
        make_two_ball_hull(c, r, separation, smoothing, resolution),
}


def build_body(generator: str, params: dict) -> BodySpec:
    try:
        factory = GENERATORS[generator]
    except KeyError:
        raise DomainError(f"unknown generator {generator!r}") from None
    return factory(**params)


def sphere_with_lambda(c: float, m: int, lam: float, resolution: int = 256) -> BodySpec:
    """Geodesic sphere whose normal curvature is exactly ``lam``."""
    return make_geodesic_sphere(c, m, characteristic_radius(c, lam), resolution=resolution)
