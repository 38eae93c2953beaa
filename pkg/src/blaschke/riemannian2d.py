"""Two-dimensional Riemannian metrics given on a chart.

Geodesics are integrated from the Christoffel symbols, distances found by
shooting, and the Gaussian curvature evaluated with the Brioschi formula.
On top of that sit a triangle comparison check and a ball-rolling verifier
for closed curves, which exercise the rolling theorem when the curvature
is only bounded below rather than constant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import CertificationError, DomainError, GeometryError, IntegrationError
from .model_space import ModelSpace, characteristic_radius, triangle_side

FD_STEP = 1e-4
MISS_TOL = 1e-8
PD_FLOOR = 1e-10

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ChartMetric:
    """Metric ``g(u)`` on a chart domain ``U`` in R^2.

    ``g`` maps points of shape ``(k, 2)`` to ``(k, 2, 2)``. ``dg`` (optional)
    returns ``dg[:, l, i, j] = d_l g_ij``; when absent, central differences
    with step ``h`` are used. ``inside`` tests membership of ``U``;
    ``bounds`` is a box containing ``U`` and ``diameter_cap`` bounds the
    size of regions on which distances are trusted to be realized by the
    geodesic the shooting finds.
    """

    name: str
    g: Field
    inside: Callable[[np.ndarray], np.ndarray]
    bounds: tuple
    dg: Optional[Field] = None
    curvature: Optional[Callable[[np.ndarray], np.ndarray]] = None
    embed: Optional[Field] = None
    model_c: Optional[float] = None
    diameter_cap: float = math.inf
    h: float = FD_STEP
    params: dict = field(default_factory=dict)


def _pts(u) -> np.ndarray:
    return np.asarray(u, dtype=float).reshape(-1, 2)


def metric_tensor(metric: ChartMetric, u) -> np.ndarray:
    g = metric.g(_pts(u))
    E, F, G = g[:, 0, 0], g[:, 0, 1], g[:, 1, 1]
    lo = 0.5 * (E + G - np.hypot(E - G, 2 * F))   # smaller eigenvalue
    if not np.all(lo > PD_FLOOR):
        raise GeometryError("singular metric")
    return g


def _inv2(g: np.ndarray) -> np.ndarray:
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
    out = np.empty_like(g)
    out[:, 0, 0] = g[:, 1, 1] / det
    out[:, 1, 1] = g[:, 0, 0] / det
    out[:, 0, 1] = -g[:, 0, 1] / det
    out[:, 1, 0] = -g[:, 1, 0] / det
    return out


def _central(fn, u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central difference of ``fn`` along each chart axis,
    stacked on axis 1."""
    e = np.eye(2) * h
    return np.stack([
        (8 * (fn(u + e[l]) - fn(u - e[l])) - (fn(u + 2 * e[l]) - fn(u - 2 * e[l]))) / (12 * h)
        for l in range(2)
    ], axis=1)


def metric_d1(metric: ChartMetric, u) -> np.ndarray:
    u = _pts(u)
    if metric.dg is not None:
        return metric.dg(u)
    return _central(metric.g, u, metric.h)


def metric_d2(metric: ChartMetric, u) -> np.ndarray:
    """``out[:, l, m, i, j] = d_l d_m g_ij`` by central differences of ``dg``."""
    u = _pts(u)
    h = metric.h
    e = np.eye(2) * h
    if metric.dg is not None:
        return _central(metric.dg, u, h)
    g0 = metric.g(u)
    out = np.empty((len(u), 2, 2, 2, 2))
    for l in range(2):
        out[:, l, l] = (metric.g(u + e[l]) - 2 * g0 + metric.g(u - e[l])) / h**2
    mixed = (metric.g(u + e[0] + e[1]) - metric.g(u + e[0] - e[1])
             - metric.g(u - e[0] + e[1]) + metric.g(u - e[0] - e[1])) / (4 * h * h)
    out[:, 0, 1] = out[:, 1, 0] = mixed
    return out


def christoffel(metric: ChartMetric, u) -> np.ndarray:
    """``out[:, k, i, j] = Gamma^k_ij``."""
    g = metric_tensor(metric, u)
    dg = metric_d1(metric, u)
    # T[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    T = (np.einsum("xijl->xlij", dg) + np.einsum("xjil->xlij", dg) - dg)
    return 0.5 * np.einsum("xkl,xlij->xkij", _inv2(g), T)


def gaussian_curvature(metric: ChartMetric, u) -> np.ndarray:
    """Brioschi formula in terms of ``E, F, G`` and their derivatives."""
    u = _pts(u)
    g = metric_tensor(metric, u)
    d1 = metric_d1(metric, u)
    d2 = metric_d2(metric, u)
    E, F, G = g[:, 0, 0], g[:, 0, 1], g[:, 1, 1]
    Eu, Ev = d1[:, 0, 0, 0], d1[:, 1, 0, 0]
    Fu, Fv = d1[:, 0, 0, 1], d1[:, 1, 0, 1]
    Gu, Gv = d1[:, 0, 1, 1], d1[:, 1, 1, 1]
    Evv, Guu, Fuv = d2[:, 1, 1, 0, 0], d2[:, 0, 0, 1, 1], d2[:, 0, 1, 0, 1]
    A = np.empty((len(u), 3, 3))
    A[:, 0] = np.stack([-Evv / 2 + Fuv - Guu / 2, Eu / 2, Fu - Ev / 2], axis=1)
    A[:, 1] = np.stack([Fv - Gu / 2, E, F], axis=1)
    A[:, 2] = np.stack([Gv / 2, F, G], axis=1)
    B = np.zeros((len(u), 3, 3))
    B[:, 0, 1] = B[:, 1, 0] = Ev / 2
    B[:, 0, 2] = B[:, 2, 0] = Gu / 2
    B[:, 1, 1:] = np.stack([E, F], axis=1)
    B[:, 2, 1:] = np.stack([F, G], axis=1)
    return (np.linalg.det(A) - np.linalg.det(B)) / (E * G - F * F) ** 2


# -- built-in metrics ----------------------------------------------------------

def _conformal(phi, dphi):
    def g(u):
        return phi(u)[:, None, None] * np.eye(2)

    def dg(u):
        return dphi(u)[:, :, None, None] * np.eye(2)

    return g, dg


def euclidean_chart(extent: float = 10.0) -> ChartMetric:
    g, dg = _conformal(lambda u: np.ones(len(u)), lambda u: np.zeros((len(u), 2)))
    return ChartMetric("euclidean", g, lambda u: np.all(np.abs(_pts(u)) < extent, axis=1),
                       ((-extent, extent), (-extent, extent)), dg,
                       curvature=lambda u: np.zeros(len(_pts(u))),
                       embed=lambda u: _pts(u).copy(), model_c=0.0,
                       params={"extent": extent})


def sphere_chart(cap: float = 2.0) -> ChartMetric:
    """Stereographic chart of the unit sphere, ``g = 4 / (1 + |x|^2)^2``."""
    def phi(u):
        return 4.0 / (1.0 + np.sum(u * u, axis=1)) ** 2

    def dphi(u):
        return -16.0 * u / (1.0 + np.sum(u * u, axis=1))[:, None] ** 3

    def embed(u):
        u = _pts(u)
        s = np.sum(u * u, axis=1)
        return np.column_stack([(1 - s) / (1 + s), 2 * u / (1 + s)[:, None]])

    g, dg = _conformal(phi, dphi)
    return ChartMetric("sphere", g, lambda u: np.sum(_pts(u) ** 2, axis=1) < cap**2,
                       ((-cap, cap), (-cap, cap)), dg,
                       curvature=lambda u: np.ones(len(_pts(u))), embed=embed, model_c=1.0,
                       diameter_cap=2.0, params={"cap": cap})


def hyperbolic_chart(cap: float = 0.9) -> ChartMetric:
    """Poincare disk, ``g = 4 / (1 - |x|^2)^2``."""
    if not 0 < cap < 1:
        raise DomainError("disk cap must lie in (0, 1)")

    def phi(u):
        return 4.0 / (1.0 - np.sum(u * u, axis=1)) ** 2

    def dphi(u):
        return 16.0 * u / (1.0 - np.sum(u * u, axis=1))[:, None] ** 3

    def embed(u):
        u = _pts(u)
        s = np.sum(u * u, axis=1)
        return np.column_stack([(1 + s) / (1 - s), 2 * u / (1 - s)[:, None]])

    g, dg = _conformal(phi, dphi)
    return ChartMetric("hyperbolic", g, lambda u: np.sum(_pts(u) ** 2, axis=1) < cap**2,
                       ((-cap, cap), (-cap, cap)), dg,
                       curvature=lambda u: -np.ones(len(_pts(u))), embed=embed, model_c=-1.0,
                       diameter_cap=2.0, params={"cap": cap})


def revolution_chart(f: Callable, df: Callable, d2f: Callable, u_range=(0.3, math.pi - 0.3),
                     v_range=(-2.0, 2.0), name: str = "revolution", params: dict | None = None
                     ) -> ChartMetric:
    """``g = du^2 + f(u)^2 dv^2`` with curvature ``-f''/f``."""
    (ulo, uhi), (vlo, vhi) = u_range, v_range

    def g(u):
        out = np.zeros((len(u), 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = f(u[:, 0]) ** 2
        return out

    def dg(u):
        out = np.zeros((len(u), 2, 2, 2))
        out[:, 0, 1, 1] = 2 * f(u[:, 0]) * df(u[:, 0])
        return out

    def inside(u):
        u = _pts(u)
        return (u[:, 0] > ulo) & (u[:, 0] < uhi) & (u[:, 1] > vlo) & (u[:, 1] < vhi)

    return ChartMetric(name, g, inside, (tuple(u_range), tuple(v_range)), dg,
                       curvature=lambda u: -d2f(_pts(u)[:, 0]) / f(_pts(u)[:, 0]),
                       diameter_cap=2.0, params=params or {})


def perturbed_sphere_chart(eps: float = 0.01, u_range=(0.3, math.pi - 0.3),
                           v_range=(-2.0, 2.0)) -> ChartMetric:
    """Revolution metric with profile ``f(u) = sin u + eps sin 3u``."""
    return revolution_chart(
        lambda u: np.sin(u) + eps * np.sin(3 * u),
        lambda u: np.cos(u) + 3 * eps * np.cos(3 * u),
        lambda u: -np.sin(u) - 9 * eps * np.sin(3 * u),
        u_range, v_range, name="perturbed_sphere",
        params={"eps": eps, "u_range": list(u_range), "v_range": list(v_range)},
    )


BUILTIN_METRICS = {
    "euclidean": euclidean_chart,
    "sphere": sphere_chart,
    "hyperbolic": hyperbolic_chart,
    "perturbed_sphere": perturbed_sphere_chart,
}


def build_metric(name: str, params: dict | None = None) -> ChartMetric:
    try:
        factory = BUILTIN_METRICS[name]
    except KeyError:
        raise DomainError(f"unknown metric {name!r}") from None
    return factory(**(params or {}))


def model_distance(metric: ChartMetric, a, b) -> np.ndarray:
    """Closed-form distance for charts of a model space (test oracle)."""
    if metric.embed is None or metric.model_c is None:
        raise DomainError("metric has no closed-form distance")
    sp = ModelSpace(metric.model_c, 2)
    return sp.distance(metric.embed(a), metric.embed(b))


# -- geodesics ------------------------------------------------------------------

def _accel(metric: ChartMetric, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``-Gamma(v, v)`` without forming the Christoffel array:
    ``g a = -(dg(v)[v] - d g(v, v) / 2)``."""
    g = metric_tensor(metric, u)
    dg = metric_d1(metric, u)
    dv = dg[:, 0] * v[:, 0, None, None] + dg[:, 1] * v[:, 1, None, None]   # d_v g
    p = np.einsum("xlj,xj->xl", dv, v)
    q = np.einsum("xlij,xi,xj->xl", dg, v, v)
    w = p - 0.5 * q
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
    a0 = (g[:, 1, 1] * w[:, 0] - g[:, 0, 1] * w[:, 1]) / det
    a1 = (g[:, 0, 0] * w[:, 1] - g[:, 0, 1] * w[:, 0]) / det
    return -np.column_stack([a0, a1])


def _rk4(metric: ChartMetric, u: np.ndarray, v: np.ndarray, h: float, n: int, keep: bool = False):
    path = [u] if keep else None
    vel = [v] if keep else None
    for _ in range(n):
        a1 = _accel(metric, u, v)
        u2, v2 = u + 0.5 * h * v, v + 0.5 * h * a1
        a2 = _accel(metric, u2, v2)
        u3, v3 = u + 0.5 * h * v2, v + 0.5 * h * a2
        a3 = _accel(metric, u3, v3)
        u4, v4 = u + h * v3, v + h * a3
        a4 = _accel(metric, u4, v4)
        u = u + (h / 6) * (v + 2 * v2 + 2 * v3 + v4)
        v = v + (h / 6) * (a1 + 2 * a2 + 2 * a3 + a4)
        if keep:
            path.append(u)
            vel.append(v)
    if keep:
        return np.stack(path, axis=1), np.stack(vel, axis=1)
    return u, v


@dataclass(frozen=True)
class GeodesicState:
    u: np.ndarray
    du: np.ndarray
    s: float = 0.0


@dataclass(frozen=True)
class GeodesicPath:
    s: np.ndarray
    u: np.ndarray
    du: np.ndarray

    def speed(self, metric: ChartMetric) -> np.ndarray:
        g = metric_tensor(metric, self.u)
        return np.sqrt(np.einsum("xi,xij,xj->x", self.du, g, self.du))

    def states(self) -> list[GeodesicState]:
        return [GeodesicState(u, du, float(s)) for s, u, du in zip(self.s, self.u, self.du)]

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "u0", "u1", "du0", "du1"])
            for s, u, du in zip(self.s, self.u, self.du):
                w.writerow([repr(float(s))] + [repr(float(x)) for x in (*u, *du)])


def unit_velocity(metric: ChartMetric, u, direction) -> np.ndarray:
    u, d = _pts(u), _pts(direction)
    g = metric_tensor(metric, u)
    return d / np.sqrt(np.einsum("xi,xij,xj->x", d, g, d))[:, None]


def integrate_geodesic(metric: ChartMetric, state0: GeodesicState, length: float,
                       step: float = 1e-3) -> GeodesicPath:
    """RK4 integration of the geodesic equation from ``state0``.

    The initial velocity is normalized to unit speed, so the parameter is
    arclength.
    """
    n = max(1, int(math.ceil(abs(length) / step)))
    h = length / n
    u0 = _pts(state0.u)
    v0 = unit_velocity(metric, u0, state0.du)
    U, V = _rk4(metric, u0, v0, h, n, keep=True)
    if not np.all(metric.inside(U[0])):
        raise IntegrationError("geodesic left the chart domain")
    return GeodesicPath(state0.s + h * np.arange(n + 1), U[0], V[0])


def _steps_for(length: float) -> int:
    return int(min(4000, max(64, math.ceil(150 * length) + 32)))


def _shoot(metric: ChartMetric, A: np.ndarray, V: np.ndarray, n: int) -> np.ndarray:
    return _rk4(metric, A, V, 1.0 / n, n)[0]


def _chart_length(metric: ChartMetric, A: np.ndarray, V: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("xi,xij,xj->x", V, metric_tensor(metric, A), V))


def shoot_batch(metric: ChartMetric, A, B, tol: float = MISS_TOL, max_iter: int = 40):
    """Initial velocities ``V`` with ``exp_A(V) = B``, batched.

    Newton's method on the endpoint map with a forward-difference Jacobian,
    started from the straight chart segment. Pairs that do not converge
    fall back to a 720-angle sweep of unit-speed geodesics with the chart
    length, followed by Newton again.
    """
    A, B = _pts(A), _pts(B)
    V = B - A
    ok = _newton(metric, A, B, V, tol, max_iter)
    for i in np.flatnonzero(~ok):
        V[i] = _sweep(metric, A[i], B[i])
        if not _newton(metric, A[i:i + 1], B[i:i + 1], V[i:i + 1], tol, max_iter)[0]:
            raise IntegrationError("no geodesic found in chart")
    return V


def _newton(metric, A, B, V, tol, max_iter) -> np.ndarray:
    """In-place Newton iteration on ``V``; returns convergence flags."""
    active = np.ones(len(A), dtype=bool)
    done = np.zeros(len(A), dtype=bool)
    delta = 1e-7
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        a, b, v = A[idx], B[idx], V[idx]
        n = _steps_for(float(np.max(_chart_length(metric, a, v))) + 1e-3)
        k = len(idx)
        batch_a = np.concatenate([a, a, a])
        batch_v = np.concatenate([v, v + [delta, 0.0], v + [0.0, delta]])
        with np.errstate(all="ignore"):
            try:
                end = _shoot(metric, batch_a, batch_v, n)
            except GeometryError:
                end = np.full_like(batch_a, np.nan)
        miss = end[:k] - b
        J = np.stack([(end[k:2 * k] - end[:k]) / delta, (end[2 * k:] - end[:k]) / delta], axis=2)
        err = np.linalg.norm(miss, axis=1)
        bad = ~np.isfinite(err)
        conv = err < tol
        done[idx[conv]] = True
        active[idx[conv | bad]] = False
        step_idx = ~(conv | bad)
        if not np.any(step_idx):
            continue
        try:
            dv = np.linalg.solve(J[step_idx], miss[step_idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            active[idx[step_idx]] = False
            continue
        # damp steps that are large relative to the current velocity
        scale = np.linalg.norm(v[step_idx], axis=1) + 1e-3
        big = np.linalg.norm(dv, axis=1) > 0.5 * scale
        dv[big] *= (0.5 * scale[big] / np.linalg.norm(dv[big], axis=1))[:, None]
        V[idx[step_idx]] = v[step_idx] - dv
    return done


def _sweep(metric: ChartMetric, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    theta = np.linspace(0, 2 * math.pi, 720, endpoint=False)
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    a_rep = np.broadcast_to(a, dirs.shape).copy()
    unit = unit_velocity(metric, a_rep, dirs)
    L = float(_chart_length(metric, a[None], (b - a)[None])[0])
    best, best_v = math.inf, None
    for scale in (0.75, 1.0, 1.25):
        v = unit * L * scale
        with np.errstate(all="ignore"):
            try:
                end = _shoot(metric, a_rep, v, _steps_for(L * scale))
            except GeometryError:
                continue
        miss = np.linalg.norm(end - b, axis=1)
        miss[~np.isfinite(miss)] = np.inf
        j = int(np.argmin(miss))
        if miss[j] < best:
            best, best_v = float(miss[j]), v[j]
    if best_v is None:
        raise IntegrationError("no geodesic found in chart")
    return best_v.copy()


def chart_distance_batch(metric: ChartMetric, A, B, tol: float = MISS_TOL) -> np.ndarray:
    A, B = _pts(A), _pts(B)
    same = np.all(A == B, axis=1)
    out = np.zeros(len(A))
    if np.any(~same):
        V = shoot_batch(metric, A[~same], B[~same], tol)
        out[~same] = _chart_length(metric, A[~same], V)
    return out


def chart_distance(metric: ChartMetric, a, b, tol: float = MISS_TOL) -> float:
    return float(chart_distance_batch(metric, a, b, tol)[0])


# -- curves ---------------------------------------------------------------------

def _diff(samples: np.ndarray, h: float, periodic: bool):
    """Fourth-order first and second derivatives with respect to the sample
    parameter (spacing ``h``)."""
    if periodic:
        r = lambda k: np.roll(samples, -k, axis=0)
        d1 = (8 * (r(1) - r(-1)) - (r(2) - r(-2))) / (12 * h)
        d2 = (16 * (r(1) + r(-1)) - (r(2) + r(-2)) - 30 * samples) / (12 * h * h)
        return d1, d2
    d1 = np.full_like(samples, np.nan)
    d2 = np.full_like(samples, np.nan)
    s = samples
    d1[2:-2] = (8 * (s[3:-1] - s[1:-3]) - (s[4:] - s[:-4])) / (12 * h)
    d2[2:-2] = (16 * (s[3:-1] + s[1:-3]) - (s[4:] + s[:-4]) - 30 * s[2:-2]) / (12 * h * h)
    return d1, d2


@dataclass(frozen=True)
class CurveFrame:
    kg: np.ndarray        # geodesic curvature w.r.t. the inward normal
    tangent: np.ndarray   # unit tangent
    normal: np.ndarray    # unit inward normal


def curve_frame(metric: ChartMetric, samples, periodic: bool = True, h: float | None = None) -> CurveFrame:
    """Geodesic curvature and unit frame along sampled curve points.

    The samples are taken as equally spaced in some parameter (spacing
    ``h``, default ``2 pi / N`` for closed curves and ``1`` otherwise).
    For a closed curve the inward side is the left side of a
    counterclockwise traversal; for an open curve it is the left side.
    """
    c = _pts(samples)
    n = len(c)
    if n < 5:
        raise DomainError("need at least five curve samples")
    if h is None:
        h = 2 * math.pi / n if periodic else 1.0
    d1, d2 = _diff(c, h, periodic)
    valid = np.all(np.isfinite(d1), axis=1)
    kg = np.full(n, np.nan)
    T = np.full_like(c, np.nan)
    N = np.full_like(c, np.nan)
    cv, v, a = c[valid], d1[valid], d2[valid]
    g = metric_tensor(metric, cv)
    speed2 = np.einsum("xi,xij,xj->x", v, g, v)
    if np.any(speed2 <= 1e-24):
        raise GeometryError("non-immersed curve point")
    acc = a + np.einsum("xkij,xi,xj->xk", christoffel(metric, cv), v, v)
    w = np.column_stack([-v[:, 1], v[:, 0]])
    w = w - (np.einsum("xi,xij,xj->x", w, g, v) / speed2)[:, None] * v
    w = w / np.sqrt(np.einsum("xi,xij,xj->x", w, g, w))[:, None]
    if periodic:
        area = 0.5 * np.sum(c[:, 0] * np.roll(c[:, 1], -1) - np.roll(c[:, 0], -1) * c[:, 1])
        if area < 0:
            w = -w
    kg[valid] = np.einsum("xi,xij,xj->x", acc, g, w) / speed2
    T[valid] = v / np.sqrt(speed2)[:, None]
    N[valid] = w
    return CurveFrame(kg, T, N)


def geodesic_curvature(metric: ChartMetric, samples, index: int | None = None,
                       periodic: bool = True, h: float | None = None):
    """``k_g = g(nabla_T T, N)`` with ``N`` the inward unit normal."""
    kg = curve_frame(metric, samples, periodic, h).kg
    return kg if index is None else float(kg[index])


# -- curvature certification ------------------------------------------------------

@dataclass(frozen=True)
class CurvatureCertificate:
    c: float
    min_K: float
    max_K: float
    samples: int
    box: tuple
    tol: float
    analytic_min: float | None = None

    @property
    def passed(self) -> bool:
        return self.min_K >= self.c - self.tol


def certify_curvature(metric: ChartMetric, c: float, box, samples: int = 256,
                      tol: float = 1e-6) -> CurvatureCertificate:
    """Sample the Brioschi curvature on a ``samples x samples`` grid over
    ``box = ((u_lo, u_hi), (v_lo, v_hi))``. A numerical certificate, not a
    rigorous bound."""
    (a0, a1), (b0, b1) = box
    U, V = np.meshgrid(np.linspace(a0, a1, samples), np.linspace(b0, b1, samples), indexing="ij")
    pts = np.column_stack([U.ravel(), V.ravel()])
    if not np.all(metric.inside(pts)):
        raise DomainError("certification box leaves the chart domain")
    K = gaussian_curvature(metric, pts)
    exact = None
    if metric.curvature is not None:
        exact = float(np.min(metric.curvature(pts)))
    kmin = float(np.min(K)) if exact is None else min(float(np.min(K)), exact)
    return CurvatureCertificate(float(c), kmin, float(np.max(K)), samples * samples,
                                ((a0, a1), (b0, b1)), float(tol), exact)


def _box(points: np.ndarray, pad: float = 0.1) -> tuple:
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    lo, hi = lo - pad * span, hi + pad * span
    return ((float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1])))


def _require_curvature(metric: ChartMetric, c: float, points: np.ndarray, samples: int, tol: float):
    cert = certify_curvature(metric, c, _box(points), samples, tol)
    if not cert.passed:
        raise CertificationError("hypothesis sec >= c violated on region")
    return cert


# -- comparison checks --------------------------------------------------------------

def _metric_angle(metric: ChartMetric, x: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(metric_tensor(metric, x))
    a = np.einsum("xji,xj->xi", L, v)
    b = np.einsum("xji,xj->xi", L, w)
    cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    return np.arctan2(cross, np.einsum("xi,xi->x", a, b))


@dataclass(frozen=True)
class ToponogovReport:
    a: float
    b: float
    angle: float
    side: float
    model_side: float
    tol: float
    min_K: float

    @property
    def margin(self) -> float:
        return self.model_side - self.side

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol


def toponogov_check(metric: ChartMetric, c: float, triangle, tol: float = 1e-6,
                    curvature_samples: int = 64) -> ToponogovReport:
    """Hinge comparison at the first vertex ``x`` of ``(x, y, z)``.

    The model triangle in M^2(c) has sides ``|xy|``, ``|xz|`` and the same
    angle at ``x``; its third side must be at least ``|yz|``.
    """
    T = _pts(triangle)
    if T.shape != (3, 2):
        raise DomainError("triangle must have three vertices")
    cert = _require_curvature(metric, c, T, curvature_samples, tol)
    x = np.broadcast_to(T[0], (2, 2)).copy()
    V = shoot_batch(metric, x, T[1:])
    a, b = _chart_length(metric, x, V)
    ang = float(_metric_angle(metric, x[:1], V[:1], V[1:])[0])
    side = chart_distance(metric, T[1], T[2])
    model = triangle_side(c, float(a), float(b), ang)
    return ToponogovReport(float(a), float(b), ang, side, float(model), float(tol), cert.min_K)


@dataclass(frozen=True)
class Rolling2DResult:
    seed_index: int
    center: np.ndarray
    min_margin: float
    argmin_index: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tol


@dataclass(frozen=True)
class Rolling2DReport:
    c: float
    lam: float
    R: float
    min_kg: float
    curvature: CurvatureCertificate
    results: list

    @property
    def min_margin(self) -> float:
        return min(r.min_margin for r in self.results)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


def verify_ball_rolling_2d(metric: ChartMetric, c: float, curve, lam: float, seeds=None,
                           tol: float = 1e-5, curvature_samples: int = 256,
                           step: float = 1e-3) -> Rolling2DReport:
    """Ball rolling for a closed curve in a chart metric with ``K >= c``.

    For each seed the center is reached by the geodesic of length ``R``
    along the inward normal, and every curve sample must lie within
    distance ``R + tol`` of it.
    """
    curve = _pts(curve)
    frame = curve_frame(metric, curve)
    kmin = float(np.min(frame.kg))
    if kmin < lam - tol:
        raise CertificationError("curve not certified lambda-convex")
    R = characteristic_radius(c, lam)
    if 2 * R > metric.diameter_cap:
        raise DomainError("rolling radius exceeds the chart's diameter cap")
    seeds = np.arange(0, len(curve), max(1, len(curve) // 16)) if seeds is None else np.asarray(seeds)
    centers = np.array([
        integrate_geodesic(metric, GeodesicState(curve[i], frame.normal[i]), R, step).u[-1]
        for i in seeds
    ])
    cert = _require_curvature(metric, c, np.vstack([curve, centers]), curvature_samples, tol)
    A = np.repeat(centers, len(curve), axis=0)
    B = np.tile(curve, (len(seeds), 1))
    D = chart_distance_batch(metric, A, B).reshape(len(seeds), len(curve))
    results = []
    for k, i in enumerate(seeds):
        margins = R - D[k]
        j = int(np.argmin(margins))
        results.append(Rolling2DResult(int(i), centers[k], float(margins[j]), j, float(tol)))
    return Rolling2DReport(float(c), float(lam), R, kmin, cert, results)


def chart_ellipse(center, axes, n: int = 256) -> np.ndarray:
    """Counterclockwise chart ellipse, handy for building test curves."""
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    return np.column_stack([center[0] + axes[0] * np.cos(t), center[1] + axes[1] * np.sin(t)])
