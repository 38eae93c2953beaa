"""Dispatch of scenarios to the verifiers.

Every module runner returns a :class:`RunResult` whose checks name the
quantity measured, the bound, the relation and the tolerance used.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..convex_body import BodySpec, build_body, certify_lambda_convex, local_geometry
from ..errors import BlaschkeError, CertificationError, QuadratureError
from ..horoball import BusemannRay, busemann_by_limit, busemann_closed_form, horocycle, verify_horoball_rolling
from ..model_space import characteristic_radius, ct
from ..radial_angle import (
    find_origin,
    gradient_decomposition_check,
    integrate_trajectory,
    interior_point,
    liouville_residual,
    monotonicity_certificate,
    rac_check,
)
from ..riemannian2d import (
    build_metric,
    certify_curvature,
    chart_ellipse,
    curve_frame,
    toponogov_check,
    verify_ball_rolling_2d,
)
from ..rolling import (
    Check,
    VerificationReport,
    counterexample_two_ball_hull,
    default_seeds,
    rigidity_probe,
    verify_ball_rolling,
    verify_diameter,
    verify_volume,
)
from .scenario import Scenario

MAX_PROBE_POINTS = 2048


@dataclass
class Sidecar:
    header: list
    rows: list


@dataclass
class RunResult:
    report: VerificationReport
    module: str
    extras: dict = field(default_factory=dict)
    sidecars: dict = field(default_factory=dict)
    error: str | None = None
    runtime: float = 0.0


# -- helpers -----------------------------------------------------------------------

def _body(sc: Scenario) -> BodySpec:
    return build_body(sc.body["generator"], sc.body_params())


def _lambda(sc: Scenario, body: BodySpec | None = None, kg=None) -> float:
    if sc.lam is not None:
        return sc.lam
    source = sc.options["lambda_from"]
    slack = float(sc.options.get("lambda_slack", 1e-6))
    if source == "min_curvature":
        kmin = float(np.min(local_geometry(body).kappas))
    elif source == "min_kg":
        kmin = float(np.min(kg))
    else:
        raise BlaschkeError(f"unknown lambda source {source!r}")
    return kmin * (1 - slack)


def _seeds(sc: Scenario, body: BodySpec) -> np.ndarray:
    if isinstance(sc.seeds, list):
        return np.asarray(sc.seeds, dtype=int)
    count = sc.seeds["count"] if isinstance(sc.seeds, dict) else 32
    return default_seeds(body, count)


def _certify(sc: Scenario, body: BodySpec, lam: float, rep: VerificationReport):
    cert = certify_lambda_convex(body, lam, sc.tol("certification"))
    rep.add(Check("certification", cert.min_kappa, lam, ">=", sc.tol("certification"),
                  {"argmin_param": list(cert.argmin_param)}))
    return cert if cert.passed else None


def _body_rows(body: BodySpec) -> Sidecar:
    X = body.points()
    k = body.grid.shape[1]
    header = ["index"] + [f"u{i}" for i in range(k)] + [f"x{i}" for i in range(X.shape[1])]
    rows = [[i, *body.grid[i], *X[i]] for i in range(len(X))]
    return Sidecar(header, rows)


def _overlay(curves: dict) -> Sidecar:
    n = max((np.asarray(p).shape[1] for p in curves.values()), default=2)
    rows = []
    for name, pts in curves.items():
        for j, x in enumerate(np.asarray(pts)):
            rows.append([name, j, *x])
    return Sidecar(["curve", "index"] + [f"x{i}" for i in range(n)], rows)


def _geodesic_circle(body: BodySpec, center: np.ndarray, R: float, n: int = 256) -> np.ndarray:
    sp = body.space
    e = sp.tangent_basis(center)
    th = np.linspace(0, 2 * math.pi, n)
    v = R * (np.cos(th)[:, None] * e[0] + np.sin(th)[:, None] * e[1])
    return sp.exp(np.broadcast_to(center, v.shape), v)


def _origin(sc: Scenario, body: BodySpec) -> np.ndarray:
    offset = sc.options.get("origin", [0.0] * body.m)
    return interior_point(body, offset, float(sc.options.get("jitter", 1e-3)))


def _starts(sc: Scenario, body: BodySpec) -> list:
    if "starts" in sc.options:
        return [np.asarray(s, dtype=float) for s in sc.options["starts"]]
    if body.m == 2:
        return [np.array([x]) for x in (0.9, 2.6)]
    return [np.array([1.1, 0.7]), np.array([2.0, 3.9])]


def _traj_rows(traj) -> Sidecar:
    s, t, phi, u, x = traj.arrays()
    header = ["s", "t", "phi"] + [f"u{i}" for i in range(u.shape[1])] + [f"x{i}" for i in range(x.shape[1])]
    return Sidecar(header, [[s[i], t[i], phi[i], *u[i], *x[i]] for i in range(len(s))])


# -- module runners ------------------------------------------------------------------

def run_rolling(sc: Scenario) -> RunResult:
    body = _body(sc)
    lam = _lambda(sc, body)
    R = characteristic_radius(body.c, lam)
    rep = VerificationReport(sc.id, body.c, lam, R)
    res = RunResult(rep, sc.module)
    cert = _certify(sc, body, lam, rep)
    if cert is None:
        return res
    tol = sc.tol("inclusion")
    results = verify_ball_rolling(body, lam, _seeds(sc, body), tol, cert)
    worst = min(results, key=lambda r: r.min_margin)
    rep.add(Check("rolling_min_margin", worst.min_margin, 0.0, ">=", tol,
                  {"seed_index": worst.seed_index, "argmin_index": worst.argmin_index,
                   "seeds": len(results)}))
    rep.add(Check("key_inequality_excess", max(r.key_excess for r in results), 0.0, "<=", tol))
    opts = sc.options
    if opts.get("expect_equality"):
        rep.add(Check("rolling_equality", max(abs(r.min_margin) for r in results), 0.0, "<=", tol))
    if opts.get("require_clearance"):
        rep.add(Check("clearance", min(r.clearance for r in results), 0.0, ">",
                      sc.tol("clearance")))

    probes = []
    for r in results:
        if len(r.contact_set) > MAX_PROBE_POINTS:
            stride = int(math.ceil(len(r.contact_set) / MAX_PROBE_POINTS))
            keep = np.union1d(r.contact_set[::stride], [r.seed_index])
            r = type(r)(**{**r.__dict__, "contact_set": keep})
        probes.append(rigidity_probe(r, body, sc.tol("half_space")))
    counts = {k: probes.count(k) for k in ("i", "ii", "none")}
    res.extras["rigidity"] = counts
    if "expect_rigidity" in opts:
        want = opts["expect_rigidity"]
        rep.add(Check("rigidity_alternative", counts.get(want, 0), len(results), ">=", 0.0,
                      {"expected": want, "counts": counts}))

    checks = opts.get("checks", ["diameter", "volume"])
    if "diameter" in checks:
        dr = verify_diameter(body, lam, tol, cert)
        rep.add(Check("diameter", dr.diameter, dr.bound, "<=", tol, {"pair": list(dr.pair)}))
        if body.space.sign > 0:
            rep.add(Check("diameter_antipodal", dr.diameter, dr.antipodal_bound, "<=", tol))
        if opts.get("expect_equality"):
            rep.add(Check("diameter_equality", abs(dr.margin), 0.0, "<=", tol))
    if "volume" in checks:
        vt = sc.tol("volume_rel")
        try:
            vr = verify_volume(body, lam, vt, sc.tol("quadrature"), cert)
        except QuadratureError as exc:
            rep.add(Check("quadrature", 1.0, 0.0, "<=", sc.tol("quadrature"), {"error": str(exc)}))
        else:
            rep.add(Check("quadrature", max(vr.volume_error, vr.boundary_error), 0.0, "<=",
                          sc.tol("quadrature")))
            rep.add(Check("volume_margin", vr.volume_margin, 0.0, ">=", vt,
                          {"volume": vr.volume, "ball_volume": vr.ball_volume}))
            rep.add(Check("boundary_margin", vr.boundary_margin, 0.0, ">=", vt,
                          {"boundary": vr.boundary, "sphere_area": vr.sphere_area}))
            if opts.get("expect_equality"):
                rep.add(Check("volume_equality", abs(vr.volume_margin), 0.0, "<=", vt))
                rep.add(Check("boundary_equality", abs(vr.boundary_margin), 0.0, "<=", vt))

    k = body.grid.shape[1]
    res.sidecars["seeds.csv"] = Sidecar(
        ["seed_index"] + [f"u{i}" for i in range(k)]
        + ["min_margin", "clearance", "argmin_index", "key_excess", "contact_count", "alternative"],
        [[r.seed_index, *r.seed_param, r.min_margin, r.clearance, r.argmin_index, r.key_excess,
          len(r.contact_set), p] for r, p in zip(results, probes)],
    )
    if body.m == 2:
        res.sidecars["body.csv"] = _body_rows(body)
        X = body.points()
        res.sidecars["overlay.csv"] = _overlay({
            "ball": _geodesic_circle(body, worst.center, R),
            "contact": X[worst.contact_set],
        })
    return res


def run_rac(sc: Scenario) -> RunResult:
    body = _body(sc)
    lam = _lambda(sc, body)
    R = characteristic_radius(body.c, lam)
    rep = VerificationReport(sc.id, body.c, lam, R)
    res = RunResult(rep, sc.module)
    if _certify(sc, body, lam, rep) is None:
        return res
    p = _origin(sc, body)
    origin = find_origin(body, p)
    rac = rac_check(body, p, lam, sc.tol("rac"), require_certified=False, origin=origin)
    rep.add(Check("rac_violation", rac.max_violation, 0.0, "<=", sc.tol("rac"),
                  {"argmax_index": rac.argmax_index, "origin_depth": rac.d,
                   "foot_ties": rac.foot_ties, "out_of_range": rac.out_of_range}))
    step = float(sc.options.get("step", 2e-3))
    trajs = [integrate_trajectory(body, p, u0, direction, step)
             for u0 in _starts(sc, body) for direction in (-1, 1)]
    monos = [monotonicity_certificate(tr, body.c, lam, origin.d, sc.tol("monotonicity")) for tr in trajs]
    rep.add(Check("monotonicity_min_slope", min(m.min_slope for m in monos), 0.0, ">=",
                  sc.tol("monotonicity"), {"trajectories": len(trajs)}))
    if sc.options.get("expect_equality"):
        rep.add(Check("equality_max_f", max(m.max_abs_f for m in monos), 0.0, "<=", sc.tol("equality")))
    if "negative_control_lambda" in sc.options:
        lam2 = float(sc.options["negative_control_lambda"])
        bad = rac_check(body, p, lam2, require_certified=False, origin=origin)
        rep.add(Check("negative_control_violation", bad.max_violation, 0.0, ">",
                      sc.tol("negative_control"), {"lambda": lam2}))
        slope = min(monotonicity_certificate(tr, body.c, lam2, origin.d).min_slope for tr in trajs)
        rep.add(Check("negative_control_slope", slope, 0.0, "<", sc.tol("monotonicity"),
                      {"lambda": lam2}))
    res.extras["origin_depth"] = origin.d
    res.sidecars["trajectory.csv"] = _traj_rows(trajs[0])
    if body.m == 2:
        res.sidecars["body.csv"] = _body_rows(body)
        res.sidecars["overlay.csv"] = _overlay(
            {f"trajectory{i}": np.asarray(tr.x) for i, tr in enumerate(trajs)} | {"origin": p[None]})
    return res


def run_liouville(sc: Scenario) -> RunResult:
    body = _body(sc)
    rep = VerificationReport(sc.id, body.c, sc.lam, None)
    res = RunResult(rep, sc.module)
    p = _origin(sc, body)
    step = float(sc.options.get("step", 1e-3))
    start = np.asarray(sc.options.get("start", [2.0] * (body.m - 1)), dtype=float)
    direction = int(sc.options.get("direction", -1))
    grad = gradient_decomposition_check(body, p)
    rep.add(Check("gradient_decomposition", grad.max_abs, 0.0, "<=", sc.tol("gradient")))
    coarse = integrate_trajectory(body, p, start, direction, step)
    fine = integrate_trajectory(body, p, start, direction, step / 2)
    r1 = liouville_residual(coarse, body, p).max_residual
    r2 = liouville_residual(fine, body, p).max_residual
    rep.add(Check("liouville_residual", r1, 0.0, "<=", sc.tol("residual"),
                  {"step": step, "samples": len(coarse)}))
    ratio = r1 / r2 if r2 > 0 else math.inf
    rep.add(Check("convergence_ratio", ratio, sc.tol("convergence_ratio"), ">=", 0.0,
                  {"residual_half_step": r2}))
    s, t, phi, _, _ = coarse.arrays()
    speed = np.abs(np.diff(t) / np.diff(s)) - np.sin(0.5 * (phi[1:] + phi[:-1]))
    rep.add(Check("dt_ds_residual", float(np.max(np.abs(speed))), 0.0, "<=", sc.tol("speed")))
    res.extras["termination"] = coarse.reason
    res.sidecars["trajectory.csv"] = _traj_rows(coarse)
    if body.m == 2:
        res.sidecars["body.csv"] = _body_rows(body)
        res.sidecars["overlay.csv"] = _overlay({"trajectory0": np.asarray(coarse.x), "origin": p[None]})
    return res


def run_horoball(sc: Scenario) -> RunResult:
    body = _body(sc)
    lam = _lambda(sc, body)
    R = characteristic_radius(body.c, lam)
    rep = VerificationReport(sc.id, body.c, lam, R)
    res = RunResult(rep, sc.module)
    cert = _certify(sc, body, lam, rep)
    if cert is None:
        return res
    seeds = _seeds(sc, body)
    tol = sc.tol("inclusion")
    fwd = verify_horoball_rolling(body, lam, seeds, tol, cert)
    rev = verify_horoball_rolling(body, lam, seeds, tol, cert, reverse=True)
    rep.add(Check("horoball_min_b", min(r.min_b for r in fwd), 0.0, ">=", tol))
    rep.add(Check("busemann_at_seed", max(abs(r.b_seed) for r in fwd), 0.0, "<=", sc.tol("busemann_seed")))
    rep.add(Check("reversed_ray_min_b", max(r.min_b for r in rev), 0.0, "<", sc.tol("reversed")))

    sp = body.space
    geo = local_geometry(body, body.grid[seeds[:1]])
    ray = BusemannRay(sp, geo.X[0], geo.nu[0])
    rng = sc.rng()
    n = int(sc.options.get("busemann_points", 100))
    t_max = float(sc.options.get("t_max", 30.0))
    dirs = rng.normal(size=(n, sp.m))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    radii = rng.uniform(0, 3, n)
    Q = sp.exp(np.broadcast_to(ray.base, (n, ray.base.size)),
               (radii[:, None] * dirs) @ sp.tangent_basis(ray.base))
    closed = busemann_closed_form(ray, Q)
    limit = np.array([busemann_by_limit(ray, q, t_max).value for q in Q])
    rep.add(Check("busemann_limit_agreement", float(np.max(np.abs(closed - limit))), 0.0, "<=",
                  sc.tol("agreement"), {"points": n, "t_max": t_max}))
    res.sidecars["horoball_seeds.csv"] = Sidecar(
        ["seed_index", "b_seed", "min_b", "reversed_min_b"],
        [[f.seed_index, f.b_seed, f.min_b, r.min_b] for f, r in zip(fwd, rev)])
    if body.m == 2:
        levels = [0.0, 0.5 * R, R]
        rows = [[lev, j, *x] for lev in levels for j, x in enumerate(horocycle(ray, lev, 3.0 * R + 1.0, 129))]
        res.sidecars["level_sets.csv"] = Sidecar(["level", "index", "x0", "x1", "x2"], rows)
        res.sidecars["body.csv"] = _body_rows(body)
        res.sidecars["overlay.csv"] = _overlay({"horocycle": horocycle(ray, 0.0, 3.0 * R + 1.0, 257)})
    return res


def run_riemannian2d(sc: Scenario) -> RunResult:
    opts = sc.options
    metric = build_metric(opts["metric"]["name"], opts["metric"].get("params", {}))
    c = sc.c
    cv = opts.get("curve", {})
    curve = chart_ellipse(cv.get("center", [0.0, 0.0]), cv.get("axes", [0.3, 0.3]), int(cv.get("n", 256)))
    frame = curve_frame(metric, curve)
    lam = _lambda(sc, kg=frame.kg)
    R = characteristic_radius(c, lam)
    rep = VerificationReport(sc.id, c, lam, R)
    res = RunResult(rep, sc.module)
    rep.add(Check("curve_min_kg", float(np.min(frame.kg)), lam, ">=", sc.tol("rolling2d")))
    if "region" in opts:
        region = tuple(tuple(b) for b in opts["region"])
        kc = certify_curvature(metric, c, region, int(opts.get("curvature_samples", 256)))
        rep.add(Check("curvature_lower_bound", kc.min_K, c, ">=", sc.tol("agreement"),
                      {"max_K": kc.max_K, "samples": kc.samples}))
    nseeds = int(sc.seeds["count"]) if isinstance(sc.seeds, dict) else 16
    seeds = np.arange(nseeds) * len(curve) // nseeds
    roll = verify_ball_rolling_2d(metric, c, curve, lam, seeds, sc.tol("rolling2d"))
    rep.add(Check("rolling2d_min_margin", roll.min_margin, 0.0, ">=", sc.tol("rolling2d"),
                  {"seeds": len(seeds)}))
    tri_rows = []
    if "triangles" in opts:
        to = opts["triangles"]
        rng = sc.rng()
        center = np.asarray(to.get("center", cv.get("center", [0.0, 0.0])), dtype=float)
        spread, size = float(to.get("spread", 0.3)), float(to.get("size", 0.25))
        margins = []
        for i in range(int(to.get("count", 50))):
            x = center + rng.uniform(-spread, spread, 2)
            tri = x + rng.uniform(-size, size, (3, 2))
            tr = toponogov_check(metric, c, tri, sc.tol("agreement"))
            margins.append(tr.margin)
            tri_rows.append([i, tr.a, tr.b, tr.angle, tr.side, tr.model_side, tr.margin])
        rep.add(Check("toponogov_min_margin", min(margins), 0.0, ">=", sc.tol("agreement"),
                      {"triangles": len(margins)}))
    if "negative_control_c" in opts:
        c2 = float(opts["negative_control_c"])
        try:
            verify_ball_rolling_2d(metric, c2, curve, lam, seeds[:1], sc.tol("rolling2d"))
            refused = 0.0
        except CertificationError:
            refused = 1.0
        rep.add(Check("overstated_c_refused", refused, 1.0, ">=", 0.0, {"c": c2}))
    res.sidecars["curve2d.csv"] = Sidecar(["index", "u", "v", "kg"],
                                          [[i, *curve[i], frame.kg[i]] for i in range(len(curve))])
    res.sidecars["rolling2d.csv"] = Sidecar(["seed_index", "center_u", "center_v", "min_margin"],
                                            [[r.seed_index, *r.center, r.min_margin] for r in roll.results])
    if tri_rows:
        res.sidecars["triangles.csv"] = Sidecar(
            ["index", "a", "b", "angle", "side", "model_side", "margin"], tri_rows)
    return res


def run_counterexample(sc: Scenario) -> RunResult:
    opts = sc.options
    c = sc.c
    if sc.lam is not None:
        lam = sc.lam
        r = characteristic_radius(c, lam)
    else:
        r = float(opts["r"])
        lam = float(ct(c, r))
    sep = float(opts["separation"]) if "separation" in opts else float(opts.get("separation_factor", 3.0)) * r
    rep = VerificationReport(sc.id, c, lam, r)
    res = RunResult(rep, sc.module)
    cx = counterexample_two_ball_hull(c, r, sep, sc.tol("penetration"),
                                      int(sc.resolution or 2048), float(opts.get("smoothing", 0.0)))
    if opts.get("control"):
        rep.add(Check("stadium_penetration", cx.penetration, 0.0, "<=", sc.tol("control")))
    else:
        rep.add(Check("penetration", cx.penetration, 0.0, ">", sc.tol("penetration"),
                      {"argmax_index": cx.argmax_index}))
    res.extras["hull_max_curvature"] = cx.max_curvature
    res.extras["separation"] = sep
    from ..convex_body import make_two_ball_hull

    body = make_two_ball_hull(c, r, sep, float(opts.get("smoothing", 0.0)), int(sc.resolution or 2048))
    res.sidecars["body.csv"] = _body_rows(body)
    res.sidecars["overlay.csv"] = _overlay({"ball": _geodesic_circle(body, cx.tangent_center, r)})
    return res


RUNNERS = {
    "rolling": run_rolling,
    "rac": run_rac,
    "liouville": run_liouville,
    "horoball": run_horoball,
    "riemannian2d": run_riemannian2d,
    "counterexample": run_counterexample,
}


def run_scenario(sc: Scenario) -> RunResult:
    """Run one scenario; verifier errors become a failing ``completed`` check."""
    t0 = time.perf_counter()
    try:
        res = RUNNERS[sc.module](sc)
    except BlaschkeError as exc:
        rep = VerificationReport(sc.id, sc.c, sc.lam, None)
        rep.add(Check("completed", 0.0, 1.0, ">=", 0.0, {"error": f"{type(exc).__name__}: {exc}"}))
        res = RunResult(rep, sc.module, error=f"{type(exc).__name__}: {exc}")
    res.runtime = time.perf_counter() - t0
    res.report.runtime = res.runtime
    return res
