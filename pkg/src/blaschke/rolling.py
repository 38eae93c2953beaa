"""Ball-rolling verifiers and the inequalities that follow from them.

A body whose boundary normal curvatures are at least ``lam`` should sit
inside the ball of radius ``R = characteristic_radius(c, lam)`` tangent to
it at any boundary point. The functions here check that inclusion on the
sampling grid, probe the equality configurations, and check the
diameter and volume bounds that follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .convex_body import (
    BodySpec,
    ConvexityCertificate,
    boundary_measure_element,
    certify_lambda_convex,
    first_order_geometry,
    local_geometry,
    make_two_ball_hull,
)
from .errors import CertificationError, DomainError, QuadratureError
from .model_space import (
    ball_volume,
    characteristic_radius,
    ct,
    half_chord,
    sn,
    sphere_area,
)

CONTACT_REL = 1e-5
KEY_EPS_REL = 0.01
SEED_CAP_REL = 0.5


# -- reports ---------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    """One named numeric verdict.

    ``relation`` compares ``value`` against ``bound``: ``">="`` and ``"<="``
    pass within ``tol``; ``">"`` and ``"<"`` require clearing the bound by
    more than ``tol``. ``margin`` is the signed slack (positive is good),
    not counting the tolerance.
    """

    name: str
    value: float
    bound: float
    relation: str
    tol: float
    detail: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        if self.relation in (">=", ">"):
            return self.value - self.bound
        return self.bound - self.value

    @property
    def passed(self) -> bool:
        if self.relation in (">=", "<="):
            return bool(self.margin >= -self.tol)
        if self.relation in (">", "<"):
            return bool(self.margin > self.tol)
        raise DomainError(f"unknown relation {self.relation!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": float(self.value),
            "bound": float(self.bound),
            "relation": self.relation,
            "tol": float(self.tol),
            "margin": float(self.margin),
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    scenario_id: str
    c: float
    lam: float | None
    R_lambda: float | None
    checks: list = field(default_factory=list)
    runtime: float | None = None

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    @property
    def failing(self) -> list:
        return [ch.name for ch in self.checks if not ch.passed]

    @property
    def worst_margin(self) -> float:
        return min((ch.margin for ch in self.checks), default=math.inf)

    def to_dict(self) -> dict:
        """Deterministic content only; the runtime is reported separately."""
        return {
            "scenario_id": self.scenario_id,
            "c": float(self.c),
            "lambda": None if self.lam is None else float(self.lam),
            "R_lambda": None if self.R_lambda is None else float(self.R_lambda),
            "passed": self.passed,
            "worst_margin": float(self.worst_margin),
            "checks": [ch.to_dict() for ch in self.checks],
        }


# -- seeds -------------------------------------------------------------------------

def default_seeds(body: BodySpec, count: int = 32) -> np.ndarray:
    """Deterministic, well-spread grid indices.

    For curves the seeds are evenly spaced; for surfaces the polar rows are
    evenly spaced and the azimuthal column advances by the golden ratio.
    """
    n = len(body.grid)
    count = min(count, n)
    if body.m == 2:
        return (np.arange(count) * n) // count
    rows, cols = body.grid_shape
    r = ((np.arange(count) + 0.5) * rows / count).astype(int)
    golden = (math.sqrt(5) - 1) / 2
    col = np.floor(np.mod(np.arange(count) * golden, 1.0) * cols).astype(int)
    return r * cols + col


def _require_certified(body: BodySpec, lam: float, certificate: ConvexityCertificate | None):
    if certificate is None:
        certificate = certify_lambda_convex(body, lam)
    if not certificate.passed or not math.isclose(certificate.lam, lam, rel_tol=0, abs_tol=1e-15):
        raise CertificationError("body not certified lambda-convex")
    return certificate


# -- rolling -------------------------------------------------------------------------

@dataclass(frozen=True)
class RollingResult:
    """Ball of radius ``R`` tangent at one seed and its margins over the grid."""

    seed_index: int
    seed_param: np.ndarray
    seed_point: np.ndarray
    center: np.ndarray
    R: float
    margins: np.ndarray
    min_margin: float
    argmin_index: int
    clearance: float
    contact_set: np.ndarray
    key_excess: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tol


def verify_ball_rolling(body: BodySpec, lam: float, seed_points: Sequence[int] | None = None,
                        tol: float = 1e-6, certificate: ConvexityCertificate | None = None,
                        contact_tol: float | None = None,
                        key_eps: float | None = None) -> list[RollingResult]:
    """Check ``B(exp_s(R nu(s)), R)`` contains every grid point, per seed.

    ``clearance`` is the smallest margin over grid points farther than
    ``R / 2`` from the seed: near the seed the margin tends to zero for
    every body, so the clearance measures how loose the fit is elsewhere.
    ``key_excess`` is the largest value of ``|c p| - (R - eps)`` for the
    points ``p = exp_q(eps nu(q))`` pushed inward from every grid point,
    where ``c`` is the center; it is nonpositive when the body fits.
    """
    _require_certified(body, lam, certificate)
    sp = body.space
    R = characteristic_radius(body.c, lam)
    contact_tol = CONTACT_REL * R if contact_tol is None else contact_tol
    eps = KEY_EPS_REL * R if key_eps is None else key_eps
    seeds = default_seeds(body) if seed_points is None else np.asarray(seed_points, dtype=int)
    geo = first_order_geometry(body)
    X = geo.X
    inward = sp.exp(X, eps * geo.nu)
    out = []
    for i in seeds:
        i = int(i)
        s = X[i]
        center = sp.exp(s, R * geo.nu[i])
        dist = sp.distance(X, center)
        if sp.sign > 0 and np.max(sp.distance(X, s)) >= math.pi / sp.kappa:
            raise DomainError("body reaches the cut locus of a seed")
        margins = R - dist
        j = int(np.argmin(margins))
        far = sp.distance(X, s) >= SEED_CAP_REL * R
        clearance = float(np.min(margins[far])) if np.any(far) else math.inf
        contact = np.flatnonzero(np.abs(margins) <= contact_tol)
        key = float(np.max(sp.distance(inward, center) - (R - eps)))
        out.append(RollingResult(i, body.grid[i].copy(), s.copy(), center, R, margins,
                                 float(margins[j]), j, clearance, contact, key, float(tol)))
    return out


def _lifted_contacts(body: BodySpec, result: RollingResult) -> np.ndarray:
    sp = body.space
    X = body.points()[result.contact_set]
    c = np.broadcast_to(result.center, X.shape)
    v = sp.log(c, X) @ sp.tangent_basis(result.center).T
    return v / np.linalg.norm(v, axis=1)[:, None]


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = k * math.pi * (3 - math.sqrt(5))
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def half_space_gap(vectors: np.ndarray) -> float:
    """``min_w max_i -<w, v_i>`` over unit ``w``.

    Positive exactly when the unit vectors ``v_i`` lie in no closed
    half-space through the origin. In the plane this is ``cos(G/2)`` with
    ``G`` the largest circular gap between the directions (exact). In
    three dimensions it is minimized by a Fibonacci sweep refined with
    Nelder-Mead from the 20 best directions.
    """
    v = np.asarray(vectors, dtype=float)
    dim = v.shape[1]
    if dim == 2:
        ang = np.sort(np.arctan2(v[:, 1], v[:, 0]))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
        return float(math.cos(float(np.max(gaps)) / 2))
    if dim != 3:
        raise DomainError("half-space test supports dimensions 2 and 3")
    W = _fibonacci_sphere(4000)
    F = np.max(-(W @ v.T), axis=1)

    def f(ang):
        th, ph = ang
        w = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
        return float(np.max(-(v @ w)))

    best = float(np.min(F))
    for k in np.argsort(F)[:20]:
        w = W[k]
        x0 = [math.acos(max(-1.0, min(1.0, w[2]))), math.atan2(w[1], w[0])]
        res = minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
        best = min(best, float(res.fun))
    return best


def rigidity_probe(result: RollingResult, body: BodySpec, half_space_tol: float = 1e-9) -> str:
    """Classify the contact configuration as ``"i"``, ``"ii"`` or ``"none"``."""
    contact = result.contact_set
    if len(contact) == 0 or (len(contact) == 1 and contact[0] == result.seed_index):
        return "none"
    if len(contact) <= body.m:
        return "ii"
    gap = half_space_gap(_lifted_contacts(body, result))
    return "i" if gap > half_space_tol else "ii"


# -- diameter -------------------------------------------------------------------------

@dataclass(frozen=True)
class DiameterReport:
    diameter: float
    bound: float
    pair: tuple
    tol: float
    antipodal_bound: float = math.inf

    @property
    def margin(self) -> float:
        return self.bound - self.diameter

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol and self.diameter <= self.antipodal_bound + self.tol


def grid_diameter(body: BodySpec, chunk: int = 512) -> tuple[float, tuple[int, int]]:
    """Largest pairwise distance between grid points.

    Distance is monotone in minus the ambient pairing (or in the squared
    Euclidean distance when c = 0), so the search runs on Gram blocks.
    """
    sp = body.space
    X = body.points()
    Xd = X * sp._metric_diag()
    sq = np.einsum("ij,ij->i", X, X) if sp.sign == 0 else None
    best, pair = -math.inf, (0, 0)
    for start in range(0, len(X), chunk):
        blk = X[start:start + chunk]
        gram = blk @ Xd.T
        key = (sq[start:start + chunk, None] + sq[None, :] - 2 * gram) if sq is not None else -gram
        k = int(np.argmax(key))
        a, b = divmod(k, len(X))
        if key[a, b] > best:
            best, pair = float(key[a, b]), (start + a, b)
    d = float(sp.distance(X[pair[0]], X[pair[1]]))
    return d, pair


def verify_diameter(body: BodySpec, lam: float, tol: float = 1e-6,
                    certificate: ConvexityCertificate | None = None) -> DiameterReport:
    _require_certified(body, lam, certificate)
    d, pair = grid_diameter(body)
    R = characteristic_radius(body.c, lam)
    anti = body.space.diameter
    return DiameterReport(d, 2 * R, pair, float(tol), anti)


# -- volume ---------------------------------------------------------------------------

def _log_coords(body: BodySpec, u: np.ndarray) -> np.ndarray:
    sp = body.space
    o = body.witness
    X = body.chart(u)
    return sp.log(np.broadcast_to(o, X.shape), X) @ sp.tangent_basis(o).T


def _radial_integral(c: float, m: int, rho: np.ndarray) -> np.ndarray:
    """``int_0^rho sn_c(t)^(m-1) dt``."""
    if m == 2:
        return np.asarray(half_chord(c, rho))
    if c == 0:
        return rho**3 / 3
    s = np.asarray(sn(c, rho))
    cs_ = 1 - c * np.asarray(half_chord(c, rho))
    return (rho - s * cs_) / (2 * c)


def enclosed_volume(body: BodySpec) -> float:
    """Volume of the region bounded by the chart, in polar coordinates about
    the witness: ``sum w * V(rho) * (solid angle element)``."""
    m = body.m
    u = body.grid
    h = body.h
    y = _log_coords(body, u)
    derivs = []
    for i in range(m - 1):
        e = np.zeros(m - 1)
        e[i] = h
        derivs.append((8 * (_log_coords(body, u + e) - _log_coords(body, u - e))
                       - (_log_coords(body, u + 2 * e) - _log_coords(body, u - 2 * e))) / (12 * h))
    rho = np.linalg.norm(y, axis=1)
    if m == 2:
        omega = (y[:, 0] * derivs[0][:, 1] - y[:, 1] * derivs[0][:, 0]) / rho**2
    else:
        omega = np.linalg.det(np.stack([y, derivs[0], derivs[1]], axis=1)) / rho**3
    return float(abs(np.sum(body.weights * _radial_integral(body.c, m, rho) * omega)))


def boundary_measure(body: BodySpec) -> float:
    return float(np.sum(body.weights * boundary_measure_element(body)))


@dataclass(frozen=True)
class VolumeReport:
    volume: float
    ball_volume: float
    boundary: float
    sphere_area: float
    volume_error: float
    boundary_error: float
    tol_rel: float

    @property
    def volume_margin(self) -> float:
        """Relative slack ``1 - Vol(D) / Vol(B)``."""
        return 1.0 - self.volume / self.ball_volume

    @property
    def boundary_margin(self) -> float:
        return 1.0 - self.boundary / self.sphere_area

    @property
    def passed(self) -> bool:
        return self.volume_margin >= -self.tol_rel and self.boundary_margin >= -self.tol_rel


def verify_volume(body: BodySpec, lam: float, tol_rel: float = 1e-6, quad_tol: float = 1e-8,
                  certificate: ConvexityCertificate | None = None) -> VolumeReport:
    """Compare volume and boundary measure with the ball of radius ``R``.

    The quadrature error is estimated by recomputing on a grid of half the
    resolution; an estimate above ``quad_tol`` (relative) is an error.
    """
    _require_certified(body, lam, certificate)
    if body.m not in (2, 3):
        raise DomainError("volume check supports m in {2, 3}")
    V, A = enclosed_volume(body), boundary_measure(body)
    coarse = body.with_resolution(max(body.resolution // 2, 8))
    Vc, Ac = enclosed_volume(coarse), boundary_measure(coarse)
    ev, ea = abs(V - Vc) / V, abs(A - Ac) / A
    if max(ev, ea) > quad_tol:
        raise QuadratureError(f"quadrature did not converge (relative change {max(ev, ea):.2e})")
    R = characteristic_radius(body.c, lam)
    return VolumeReport(V, ball_volume(body.c, body.m, R), A, sphere_area(body.c, body.m, R),
                        ev, ea, float(tol_rel))


# -- two-ball hull ------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleReport:
    c: float
    lam: float
    R: float
    separation: float
    penetration: float
    argmax_index: int
    tangent_center: np.ndarray
    max_curvature: float
    tol: float

    @property
    def passed(self) -> bool:
        """True when the tangent ball pokes out of the hull (counterexample
        confirmed)."""
        return self.penetration > self.tol


def counterexample_two_ball_hull(c: float, r: float, separation: float, tol: float = 1e-6,
                                 resolution: int = 2048, smoothing: float = 0.0
                                 ) -> CounterexampleReport:
    """Tangent ball of radius ``r`` at the hull point closest to the origin.

    Since the hull boundary has curvature at most ``ct_c(r)``, a ball of
    radius ``r`` would roll freely inside it if the dual of the rolling
    theorem held. The penetration is the largest amount by which the hull
    boundary enters that ball.
    """
    if c > 0:
        raise DomainError("two-ball hull is defined for c <= 0")
    body = make_two_ball_hull(c, r, separation, smoothing=smoothing, resolution=resolution)
    sp = body.space
    geo = local_geometry(body)
    lam = float(ct(c, r))
    d0 = sp.distance(geo.X, sp.origin())
    k = int(np.argmin(d0))
    center = sp.exp(geo.X[k], r * geo.nu[k])
    depth = r - sp.distance(geo.X, center)
    j = int(np.argmax(depth))
    return CounterexampleReport(float(c), lam, float(r), float(separation),
                                float(max(0.0, depth[j])), j, center,
                                float(np.max(geo.kappas)), float(tol))

