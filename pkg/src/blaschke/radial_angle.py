"""Radial angle function of a body with respect to an interior origin.

For an origin ``p`` inside the body and a boundary point ``q``, the radial
angle is the angle at ``q`` between the arriving geodesic from ``p`` and the
outward normal. This module evaluates it on grids, integrates the
normalized gradient flow of the restricted distance ``t = d(p, .)`` along
the boundary, and checks the curvature identity and the comparison
inequality that this angle obeys.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .convex_body import BodySpec, certify_lambda_convex, first_order_geometry, local_geometry
from .errors import CertificationError, DomainError, GeometryError, IntegrationError
from .model_space import characteristic_radius, ct, half_chord, sn

PHI_FLOOR = 1e-6


@dataclass(frozen=True)
class Origin:
    """Interior origin with its distance to the boundary and nearest foot."""

    point: np.ndarray
    d: float
    foot: np.ndarray
    foot_index: int
    ties: int = 1


def find_origin(body: BodySpec, p, refine: bool = True) -> Origin:
    """Distance from ``p`` to the boundary; ties on the grid go to the
    smallest parameter value."""
    sp = body.space
    p = np.asarray(p, dtype=float)
    dist = sp.distance(body.points(), p)
    i = int(np.argmin(dist))
    ties = int(np.sum(dist <= dist[i] + 1e-12))
    u0 = body.grid[i].copy()
    d = float(dist[i])
    if d <= 0:
        raise GeometryError("origin lies on the boundary")
    if refine:
        f = lambda u: float(sp.distance(body.chart(np.atleast_2d(u)), p)[0])
        if body.m == 2:
            du = _grid_spacing(body)
            res = minimize_scalar(lambda x: f([x]), bounds=(u0[0] - du, u0[0] + du),
                                  method="bounded", options={"xatol": 1e-12})
            if res.fun < d:
                u0, d = np.array([res.x]), float(res.fun)
        else:
            res = minimize(f, u0, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            if res.fun < d and body.in_domain(res.x):
                u0, d = np.asarray(res.x), float(res.fun)
    return Origin(p, d, body.wrap(u0), i, ties)


def _grid_spacing(body: BodySpec) -> float:
    g = body.grid[:, 0]
    return float(np.max(np.diff(np.unique(g)))) if len(g) > 1 else 1.0


def interior_point(body: BodySpec, offset, jitter: float = 1e-3) -> np.ndarray:
    """``exp_w(offset + jitter)`` from the body's witness, with ``offset``
    given in the tangent frame at the witness.

    The deterministic jitter moves the origin off symmetry axes so that the
    nearest boundary point is unique.
    """
    sp = body.space
    w = body.witness
    off = np.asarray(offset, dtype=float) + jitter * np.sqrt(np.arange(1, body.m + 1) / body.m)
    return sp.exp(w, sp.from_tangent_coords(w, off))


# -- pointwise quantities -------------------------------------------------------

def _arrival(body: BodySpec, X: np.ndarray, p: np.ndarray) -> np.ndarray:
    sp = body.space
    back = sp.log(X, np.broadcast_to(p, X.shape))
    n = sp.norm(back)
    if np.any(n <= 0):
        raise GeometryError("radial angle undefined at the origin")
    return -back / n[:, None]


def radial_angle(body: BodySpec, p, u=None) -> np.ndarray:
    """Radial angle at chart parameters ``u`` (default: the whole grid)."""
    geo = local_geometry(body, u)
    Z = _arrival(body, geo.X, np.asarray(p, dtype=float))
    return body.space.angle(geo.X, Z, -geo.nu)


@dataclass(frozen=True)
class GradientResiduals:
    tangential: np.ndarray   # |proj Z| - |sin phi|
    normal: np.ndarray       # <Z, nu> + cos phi
    phi: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.tangential)), np.max(np.abs(self.normal))))


def gradient_decomposition_check(body: BodySpec, p, u=None) -> GradientResiduals:
    """Residuals of ``grad_M d_p = grad_S d_p - cos(phi) nu``."""
    sp = body.space
    geo = local_geometry(body, u)
    Z = _arrival(body, geo.X, np.asarray(p, dtype=float))
    phi = sp.angle(geo.X, Z, -geo.nu)
    zn = sp.inner(Z, geo.nu)
    tang = Z - zn[:, None] * geo.nu
    return GradientResiduals(sp.norm(tang) - np.abs(np.sin(phi)), zn + np.cos(phi), phi)


def _flow(body: BodySpec, p: np.ndarray, u: np.ndarray, direction: int):
    """Unit-speed chart velocity of the normalized gradient flow, plus the
    distance and radial angle at ``u``."""
    geo = first_order_geometry(body, u)
    sp = body.space
    Z = _arrival(body, geo.X, p)
    grad = sp.inner(geo.dX, Z[:, None, :])               # dt/du_i
    v = np.linalg.solve(geo.G, grad[..., None])[..., 0]  # G^-1 grad
    speed = np.sqrt(np.maximum(np.einsum("ki,ki->k", grad, v), 0.0))
    t = sp.distance(geo.X, p)
    phi = sp.angle(geo.X, Z, -geo.nu)
    safe = np.where(speed > 0, speed, 1.0)
    return direction * v / safe[:, None], t, phi, geo


# -- trajectories -----------------------------------------------------------------

@dataclass
class Trajectory:
    """Samples of an integral curve of the normalized gradient of ``t``."""

    direction: int
    s: list = field(default_factory=list)
    t: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    u: list = field(default_factory=list)
    x: list = field(default_factory=list)
    reason: str = ""

    def arrays(self):
        return (np.asarray(self.s), np.asarray(self.t), np.asarray(self.phi),
                np.asarray(self.u), np.asarray(self.x))

    def __len__(self) -> int:
        return len(self.s)

    def to_csv(self, path) -> None:
        s, t, phi, u, x = self.arrays()
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "t", "phi"] + [f"u{i}" for i in range(u.shape[1])]
                       + [f"x{i}" for i in range(x.shape[1])])
            for row in zip(s, t, phi, u, x):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2]))]
                           + [repr(float(v)) for v in row[3]] + [repr(float(v)) for v in row[4]])


def integrate_trajectory(body: BodySpec, p, u0, direction: int = -1, step: float = 1e-3,
                         phi_floor: float = PHI_FLOOR, min_step: float = 1e-13,
                         max_length: float | None = None) -> Trajectory:
    """RK4 integration of ``du/ds = +-G^{-1} grad t / |grad t|``.

    ``direction=-1`` follows decreasing distance. The step is halved
    whenever a step would cross a zero of the gradient (the flow reverses
    there); integration ends once the radial angle drops below
    ``phi_floor``, or at the chart boundary.
    """
    if direction not in (-1, 1):
        raise DomainError("direction must be +1 or -1")
    p = np.asarray(p, dtype=float)
    u = np.asarray(u0, dtype=float).reshape(1, -1)
    F, t, phi, geo = _flow(body, p, u, direction)
    if phi[0] <= phi_floor:
        raise DomainError("trajectory start lies at a critical point")
    if max_length is None:
        diam = float(np.max(body.space.distance(body.points(), geo.X[0])))
        max_length = 10.0 * max(diam, 1e-3) * math.pi
    traj = Trajectory(direction)

    def record(s, u, t, phi, X):
        traj.s.append(float(s))
        traj.t.append(float(t))
        traj.phi.append(float(phi))
        traj.u.append(body.wrap(u[0]).copy())
        traj.x.append(X.copy())

    s = 0.0
    record(s, u, t[0], phi[0], geo.X[0])
    h = step
    Gu = geo.G[0]
    while True:
        k1 = F
        k2 = _flow(body, p, u + 0.5 * h * k1, direction)[0]
        k3 = _flow(body, p, u + 0.5 * h * k2, direction)[0]
        k4 = _flow(body, p, u + h * k3, direction)[0]
        un = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not body.in_domain(un):
            traj.reason = "chart boundary"
            return traj
        Fn, tn, phin, geon = _flow(body, p, un, direction)
        forward = direction * (tn[0] - t[0]) > 0
        aligned = float(F[0] @ Gu @ Fn[0]) > 0
        stage_ok = all(float(F[0] @ Gu @ k[0]) > 0 for k in (k2, k3, k4))
        if not (forward and aligned and stage_ok):
            h *= 0.5
            if h < min_step:
                if phi[0] < 1e-4:
                    traj.reason = "critical point (step floor)"
                    return traj
                raise IntegrationError("stiff trajectory")
            continue
        s += h
        u, F, t, phi, Gu = un, Fn, tn, phin, geon.G[0]
        record(s, u, t[0], phi[0], geon.X[0])
        if phi[0] < phi_floor:
            traj.reason = "critical point"
            return traj
        if s > max_length:
            traj.reason = "max length"
            return traj
        h = min(2 * h, step)


# -- curvature identity --------------------------------------------------------------

@dataclass(frozen=True)
class LiouvilleResult:
    max_residual: float
    t: np.ndarray
    normal_curvature: np.ndarray
    model_term: np.ndarray
    derivative_term: np.ndarray

    @property
    def residuals(self) -> np.ndarray:
        return self.normal_curvature - self.model_term - self.derivative_term


def liouville_residual(traj: Trajectory, body: BodySpec, p, phi_min: float = 0.0) -> LiouvilleResult:
    """Max over interior samples of ``|k(q, X) - ct_c(t) cos(phi) - d cos(phi)/dt|``.

    The derivative is a centered difference over neighbouring samples,
    taken in arclength and converted with ``dt/ds = +-sin(phi)``.
    Samples with radial angle below ``phi_min`` are skipped.
    """
    if len(traj) < 5:
        raise DomainError("trajectory too short for the curvature identity")
    s, t, phi, u, x = traj.arrays()
    p = np.asarray(p, dtype=float)
    idx = np.arange(1, len(t) - 1)
    idx = idx[phi[idx] >= phi_min]
    F = _flow(body, p, u[idx], traj.direction)[0]
    geo = local_geometry(body, u[idx])
    k = np.einsum("ki,kij,kj->k", F, geo.B, F) / np.einsum("ki,kij,kj->k", F, geo.G, F)
    # Along the flow dt/ds = dir * sin(phi), hence d(cos phi)/dt = -dir * dphi/ds.
    # Differencing phi in arclength avoids the cancellation in t near the foot,
    # where consecutive samples differ in t by O(phi * dphi).
    deriv = -traj.direction * (phi[idx + 1] - phi[idx - 1]) / (s[idx + 1] - s[idx - 1])
    model = np.asarray(ct(body.c, t[idx])) * np.cos(phi[idx])
    res = k - model - deriv
    return LiouvilleResult(float(np.max(np.abs(res))), t[idx], k, model, deriv)


# -- comparison with the model sphere -------------------------------------------------

def comparison_radial_angle(c: float, lam: float, d: float, t, slack: float = 1e-9):
    """Radial angle on the model sphere of curvature ``lam`` at distance
    ``t`` from an origin lying ``d`` inside it.

    It is the angle at ``q`` of the model triangle with sides
    ``|oq| = R``, ``|qp| = t`` and ``|op| = R - d``.
    """
    R = characteristic_radius(c, lam)
    if not 0 < d < R:
        raise DomainError("origin depth must lie in (0, R_lambda)")
    t = np.asarray(t, dtype=float)
    lo, hi = d, 2 * R - d
    if np.any(t < lo - slack * max(1.0, lo)) or np.any(t > hi + slack * max(1.0, hi)):
        raise DomainError("outside sphere chord range")
    t = np.clip(t, lo, hi)
    num = np.asarray(half_chord(c, R - d)) - np.asarray(half_chord(c, R - t))
    den = 2.0 * float(sn(c, R)) * np.asarray(sn(c, t))
    s2 = np.clip(num / den, 0.0, 1.0)
    out = np.where(s2 < 0.5, 2 * np.arcsin(np.sqrt(s2)), np.arccos(1 - 2 * s2))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class RacReport:
    lam: float
    d: float
    R_lambda: float
    max_violation: float
    argmax_index: int
    checked: int
    out_of_range: int
    max_excess: float
    tol: float
    foot_ties: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol and self.out_of_range == 0


def rac_check(body: BodySpec, p, lam: float, tol: float = 1e-6,
              require_certified: bool = True, origin: Origin | None = None) -> RacReport:
    """Check ``phi(q) <= phi_lambda(|pq|)`` at every grid point."""
    if require_certified and not certify_lambda_convex(body, lam).passed:
        raise CertificationError("body not certified lambda-convex")
    origin = origin or find_origin(body, p)
    R = characteristic_radius(body.c, lam)
    d = origin.d
    if d >= R:
        raise DomainError("origin too deep for the comparison sphere")
    t = body.space.distance(body.points(), origin.point)
    phi = radial_angle(body, origin.point)
    hi = 2 * R - d
    inside = t <= hi
    t_in = np.clip(t[inside], d, hi)
    viol = np.full(t.shape, -np.inf)
    viol[inside] = phi[inside] - comparison_radial_angle(body.c, lam, d, t_in)
    i = int(np.argmax(viol))
    excess = float(np.max(t - hi, initial=0.0))
    return RacReport(float(lam), d, R, float(viol[i]), i, int(np.sum(inside)),
                     int(np.sum(~inside)), excess, float(tol), origin.ties)


@dataclass(frozen=True)
class MonotonicityReport:
    min_slope: float
    max_abs_f: float
    samples: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.min_slope >= -self.tol


def monotonicity_certificate(traj: Trajectory, c: float, lam: float, d: float,
                             tol: float = 1e-6, min_dt: float = 1e-6) -> MonotonicityReport:
    """Discrete slopes of ``t -> (cos phi - cos phi_lambda) sn_c(t)``.

    Consecutive samples closer than ``min_dt`` in ``t`` are thinned out so
    that rounding in ``f`` is not amplified by tiny denominators.
    """
    _, t, phi, _, _ = traj.arrays()
    R = characteristic_radius(c, lam)
    order = np.argsort(t)
    t, phi = t[order], phi[order]
    keep = (t >= d - 1e-12) & (t <= 2 * R - d + 1e-12)
    t, phi = t[keep], phi[keep]
    if len(t) < 2:
        raise DomainError("trajectory has no samples inside the chord range")
    f = np.cos(phi) - np.cos(comparison_radial_angle(c, lam, d, t))
    g = f * np.asarray(sn(c, t))
    sel = [0]
    for i in range(1, len(t)):
        if t[i] - t[sel[-1]] >= min_dt:
            sel.append(i)
    sel = np.asarray(sel)
    if len(sel) < 2:
        raise DomainError("trajectory too short in t")
    slopes = np.diff(g[sel]) / np.diff(t[sel])
    return MonotonicityReport(float(np.min(slopes)), float(np.max(np.abs(f))), len(sel), float(tol))
