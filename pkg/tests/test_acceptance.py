"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``. Tolerances are pinned here rather
than taken from the package defaults, so loosening a default cannot make
a criterion pass.
"""

from __future__ import annotations

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from blaschke.convex_body import (
    certify_lambda_convex,
    make_ellipse_like,
    make_geodesic_sphere,
    make_revolution_body,
)
from blaschke.harness.report import run_suite
from blaschke.harness.scenario import bundled_scenarios_dir
from blaschke.model_space import ct
from blaschke.radial_angle import interior_point, rac_check
from blaschke.rolling import verify_ball_rolling, verify_diameter, verify_volume

# pinned tolerances
CERT_TOL = 1e-8
EQUALITY_TOL = 1e-6
CLEARANCE_MIN = 1e-3
INCLUSION_TOL = 1e-6
VOLUME_TOL = 1e-6
RESIDUAL_MAX = 1e-4
RATIO_MIN = 1.8
RAC_TOL = 1e-6
F_TOL = 1e-7
CONTROL_MIN = 1e-3
BUSEMANN_SEED = 1e-8
REVERSED_MAX = -1e-2
PENETRATION_MIN = 1e-3
STADIUM_MAX = 1e-9
ROLLING2D_TOL = 1e-5

SPHERE_CASES = [(c, m, r) for c in (-1.0, 0.0, 1.0) for m in (2, 3) for r in (0.3, 0.7, 1.0)]
ELLIPSES = [(2.0, 1.0), (1.5, 1.0), (3.0, 1.0)]
OVAL = {"kind": "cosine", "r0": 0.8, "eps": 0.05, "k": 2}

RESULTS: dict[int, tuple[bool, str]] = {}


def report(n: int, ok: bool, detail: str) -> None:
    """Record the criterion line; conftest prints all of them at the end."""
    RESULTS[n] = (ok, detail)


def criterion_lines() -> list[str]:
    lines = []
    for n in range(1, 11):
        ok, detail = RESULTS.get(n, (False, "did not complete"))
        lines.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    return lines


def sphere_body(c, m, r):
    return make_geodesic_sphere(c, m, r, resolution=2048 if m == 2 else 128)


def certified_bodies():
    """Every certified body of criteria 1 and 2 with its lambda and whether
    it is a radius-R_lambda sphere."""
    out = []
    for c, m, r in SPHERE_CASES:
        out.append((f"sphere c={c:g} m={m} r={r}", sphere_body(c, m, r), float(ct(c, r)), True))
    for a, b in ELLIPSES:
        out.append((f"ellipse {a:g}x{b:g}", make_ellipse_like(0.0, (a, b), 2048), b / a**2, False))
    oval = make_revolution_body(-1.0, OVAL, 2, 2048)
    lam = certify_lambda_convex(oval, 0.0).min_kappa * (1 - 1e-6)
    out.append(("hyperbolic oval m=2", oval, lam, False))
    oval3 = make_revolution_body(-1.0, OVAL, 3, 128)
    lam3 = certify_lambda_convex(oval3, 0.0).min_kappa * (1 - 1e-6)
    out.append(("hyperbolic oval m=3", oval3, lam3, False))
    return out


@pytest.fixture(scope="module")
def bodies():
    return certified_bodies()


@pytest.fixture(scope="module")
def suite_runs(tmp_path_factory):
    """The bundled suite, run twice into separate directories."""
    out = []
    for name in ("first", "second"):
        d = tmp_path_factory.mktemp(name)
        t0 = time.perf_counter()
        rows = run_suite(bundled_scenarios_dir(), d, workers=1)
        out.append((d, {r.id: r for r in rows}, time.perf_counter() - t0))
    return out


def checks_of(run_dir: Path, scenario_id: str) -> dict:
    doc = json.loads((run_dir / scenario_id / "report.json").read_text())
    return {c["name"]: c for c in doc["checks"]}


# -- criteria ----------------------------------------------------------------------

def test_criterion_1_sphere_self_consistency():
    worst_cert = worst_eq = 0.0
    min_clear = math.inf
    slowest = 0.0
    failures = []
    for c, m, r in SPHERE_CASES:
        t0 = time.perf_counter()
        body = sphere_body(c, m, r)
        lam = float(ct(c, r))
        cert = certify_lambda_convex(body, lam)
        err = abs(cert.min_kappa - lam)
        worst_cert = max(worst_cert, err)
        # r = R_lambda: the ball coincides with the body, every margin vanishes
        eq = verify_ball_rolling(body, lam, certificate=cert)
        dev = max(float(np.max(np.abs(x.margins))) for x in eq)
        worst_eq = max(worst_eq, dev)
        # r = 0.9 R_lambda': strictly inside, away from the seed
        lam_big = float(ct(c, r / 0.9))
        loose = verify_ball_rolling(body, lam_big)
        clear = min(x.clearance for x in loose)
        in_band = all(abs(x.min_margin) <= EQUALITY_TOL for x in loose)
        min_clear = min(min_clear, clear)
        dt = time.perf_counter() - t0
        slowest = max(slowest, dt)
        if not (err < CERT_TOL and dev <= EQUALITY_TOL and clear > CLEARANCE_MIN and in_band and dt < 10):
            failures.append((c, m, r))
    ok = not failures
    report(1, ok, f"18 spheres, max |kmin-lam|={worst_cert:.1e}, max |margin| at r=R={worst_eq:.1e}, "
                  f"min clearance at r=0.9R={min_clear:.2e}, slowest {slowest:.1f}s"
                  + (f", failing {failures}" if failures else ""))
    assert ok


def test_criterion_2_rolling_non_spheres():
    worst = math.inf
    key = -math.inf
    details = []
    for a, b in ELLIPSES:
        body = make_ellipse_like(0.0, (a, b), 2048)
        res = verify_ball_rolling(body, b / a**2, tol=INCLUSION_TOL)
        assert len(res) == 32
        worst = min(worst, min(x.min_margin for x in res))
        key = max(key, max(x.key_excess for x in res))
    for m, resolution in ((2, 2048), (3, 128)):
        oval = make_revolution_body(-1.0, OVAL, m, resolution)
        cert = certify_lambda_convex(oval, 0.0)
        lam = cert.min_kappa * (1 - 1e-6)
        details.append(f"oval m={m} lam={lam:.4f}")
        assert lam > 1
        res = verify_ball_rolling(oval, lam, tol=INCLUSION_TOL)
        worst = min(worst, min(x.min_margin for x in res))
        key = max(key, max(x.key_excess for x in res))
    ok = worst >= -INCLUSION_TOL and key <= INCLUSION_TOL
    report(2, ok, f"3 ellipses + hyperbolic ovals ({', '.join(details)}), 32 seeds, "
                  f"min margin={worst:.1e}, max key-inequality excess={key:.1e}")
    assert ok


def test_criterion_3_diameter(bodies):
    worst = math.inf
    worst_eq = 0.0
    worst_anti = math.inf
    for _, body, lam, is_sphere in bodies:
        rep = verify_diameter(body, lam, INCLUSION_TOL)
        worst = min(worst, rep.margin)
        if is_sphere:
            worst_eq = max(worst_eq, abs(rep.margin))
        if body.c > 0:
            worst_anti = min(worst_anti, math.pi / math.sqrt(body.c) - rep.diameter)
    ok = worst >= -INCLUSION_TOL and worst_eq <= EQUALITY_TOL and worst_anti >= -INCLUSION_TOL
    report(3, ok, f"{len(bodies)} certified bodies, min margin={worst:.2e}, "
                  f"max |margin| on R-spheres={worst_eq:.1e}, min pi/sqrt(c)-diam={worst_anti:.3f}")
    assert ok


def test_criterion_4_volume(bodies):
    worst = math.inf
    worst_eq = 0.0
    for _, body, lam, is_sphere in bodies:
        rep = verify_volume(body, lam, VOLUME_TOL)
        worst = min(worst, rep.volume_margin, rep.boundary_margin)
        if is_sphere:
            worst_eq = max(worst_eq, abs(rep.volume_margin), abs(rep.boundary_margin))
    ok = worst >= -VOLUME_TOL and worst_eq <= VOLUME_TOL
    report(4, ok, f"{len(bodies)} certified bodies, min relative margin={worst:.2e}, "
                  f"max |margin| on R-spheres={worst_eq:.1e}")
    assert ok


def test_criterion_5_liouville(suite_runs):
    run_dir = suite_runs[0][0]
    parts, ok = [], True
    for sid in ("liouville_offset_circle", "liouville_hyperbolic_circle"):
        ch = checks_of(run_dir, sid)
        res = ch["liouville_residual"]["value"]
        ratio = ch["convergence_ratio"]["value"]
        ok &= res < RESIDUAL_MAX and ratio >= RATIO_MIN
        parts.append(f"{sid}: residual={res:.2e}, ratio={ratio:.2f}")
    report(5, ok, "; ".join(parts))
    assert ok


def test_criterion_6_radial_angle(suite_runs, bodies):
    run_dir = suite_runs[0][0]
    worst = -math.inf
    for _, body, lam, _ in bodies:
        if body.m != 2:
            continue
        p = interior_point(body, [0.1, 0.05])
        worst = max(worst, rac_check(body, p, lam, RAC_TOL).max_violation)
    ell = checks_of(run_dir, "rac_ellipse")
    eq = checks_of(run_dir, "rac_sphere_equality")
    slope = min(ell["monotonicity_min_slope"]["value"], eq["monotonicity_min_slope"]["value"])
    worst = max(worst, ell["rac_violation"]["value"], eq["rac_violation"]["value"])
    f_max = eq["equality_max_f"]["value"]
    control = ell["negative_control_violation"]["value"]
    ok = worst < RAC_TOL and slope >= -RAC_TOL and f_max < F_TOL and control > CONTROL_MIN
    report(6, ok, f"max RAC violation={worst:.1e}, min slope={slope:.1e}, "
                  f"|f| on R-sphere={f_max:.1e}, overstated-lambda violation={control:.3f}")
    assert ok


def test_criterion_7_horoball(suite_runs):
    run_dir, rows, _ = suite_runs[0]
    parts, ok = [], True
    for sid in ("horoball_r0p5", "horoball_r1", "horoball_r5"):
        ch = checks_of(run_dir, sid)
        min_b = ch["horoball_min_b"]["value"]
        seed = ch["busemann_at_seed"]["value"]
        rev = ch["reversed_ray_min_b"]["value"]
        agree = ch["busemann_limit_agreement"]["value"]
        points = ch["busemann_limit_agreement"]["detail"]["points"]
        t_max = ch["busemann_limit_agreement"]["detail"]["t_max"]
        rt = rows[sid].runtime
        ok &= (min_b >= -INCLUSION_TOL and seed < BUSEMANN_SEED and rev < REVERSED_MAX
               and agree < 1e-6 and points == 100 and t_max == 30 and rt < 10)
        parts.append(f"{sid}: min b={min_b:.1e}, reversed={rev:.2f}, agreement={agree:.1e}, {rt:.2f}s")
    report(7, ok, "; ".join(parts))
    assert ok


def test_criterion_8_counterexample(suite_runs):
    run_dir = suite_runs[0][0]
    pen = checks_of(run_dir, "hull_counterexample")["penetration"]["value"]
    stadium = checks_of(run_dir, "stadium_control")["stadium_penetration"]["value"]
    ok = pen > PENETRATION_MIN and stadium < STADIUM_MAX
    report(8, ok, f"hyperbolic hull penetration={pen:.4f}, Euclidean stadium penetration={stadium:.1e}")
    assert ok


def test_criterion_9_varying_curvature(suite_runs):
    run_dir, rows, _ = suite_runs[0]
    ch = checks_of(run_dir, "riemannian2d_oval")
    kmin = ch["curvature_lower_bound"]["value"]
    kmax = ch["curvature_lower_bound"]["detail"]["max_K"]
    margin = ch["rolling2d_min_margin"]["value"]
    topo = ch["toponogov_min_margin"]["value"]
    count = ch["toponogov_min_margin"]["detail"]["triangles"]
    refused = ch["overstated_c_refused"]["value"]
    rt = rows["riemannian2d_oval"].runtime
    ok = (0.9 <= kmin and kmax <= 1.1 and margin >= -ROLLING2D_TOL and topo >= -1e-6
          and count == 50 and refused == 1.0 and rt < 60)
    report(9, ok, f"K in [{kmin:.4f}, {kmax:.4f}], rolling margin={margin:.1e}, "
                  f"Toponogov min margin over {count} triangles={topo:.1e}, c=1.1 refused, {rt:.1f}s")
    assert ok


def test_criterion_10_determinism(suite_runs):
    (a, rows_a, _), (b, rows_b, _) = suite_runs
    files = sorted(p.relative_to(a) for p in a.rglob("*")
                   if p.is_file() and p.name not in ("record.json", "timing.csv"))
    differing = [str(f) for f in files if (a / f).read_bytes() != (b / f).read_bytes()]
    all_pass = all(r.verdict == "PASS" for r in rows_a.values())
    ok = not differing and all_pass and sorted(rows_a) == sorted(rows_b)
    report(10, ok, f"{len(files)} report/sidecar files byte-identical across two suite runs"
                   f"{'' if not differing else f', differing: {differing}'}; "
                   f"{len(rows_a)} bundled scenarios {'all PASS' if all_pass else 'not all PASS'}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
