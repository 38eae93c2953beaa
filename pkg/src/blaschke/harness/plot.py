"""Static SVG plots of two-dimensional runs.

Points of M^2(c) are drawn in a disk model: the hyperboloid goes to the
Poincare disk, the sphere is projected stereographically from the pole
opposite the origin and the plane is drawn as is. Both projections reduce
to ``x[1:] / (1 + kappa x[0])`` applied to ``kappa x``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..errors import ScenarioError

SIZE = 600
PALETTE = {"body": "#1f4e79", "ball": "#c0392b", "contact": "#e67e22", "origin": "#27ae60",
           "horocycle": "#8e44ad"}


def project(points: np.ndarray, c: float) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if c == 0 or points.shape[1] == 2:
        return points
    k = math.sqrt(abs(c))
    y = k * points
    return y[:, 1:] / (1.0 + y[:, :1])


def _read(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _columns(header, rows, prefix="x"):
    idx = [i for i, h in enumerate(header) if h.startswith(prefix) and h[len(prefix):].isdigit()]
    return np.array([[float(r[i]) for i in idx] for r in rows]) if rows else np.zeros((0, len(idx)))


def _polyline(P, color, width=1.5, closed=False, dots=False) -> str:
    if dots:
        return "".join(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="{color}"/>' for x, y in P)
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in P)
    tag = "polygon" if closed else "polyline"
    return f'<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'


def render_svg(run_dir, out=None) -> Path:
    """Draw ``body.csv`` and ``overlay.csv`` of a run directory to ``plot.svg``."""
    run_dir = Path(run_dir)
    if run_dir.is_file():
        run_dir = run_dir.parent
    report = json.loads((run_dir / "report.json").read_text())
    c = float(report["c"])
    layers = []
    if (run_dir / "body.csv").exists():
        layers.append(("body", project(_columns(*_read(run_dir / "body.csv")), c), True))
    if (run_dir / "overlay.csv").exists():
        header, rows = _read(run_dir / "overlay.csv")
        names = sorted({r[0] for r in rows})
        for name in names:
            pts = _columns(header, [r for r in rows if r[0] == name])
            layers.append((name, project(pts, c), False))
    if (run_dir / "curve2d.csv").exists():
        header, rows = _read(run_dir / "curve2d.csv")
        layers.append(("body", np.array([[float(r[1]), float(r[2])] for r in rows]), True))
    if not layers:
        raise ScenarioError("run has no two-dimensional geometry to plot", "<run>")
    allp = np.vstack([p for _, p, _ in layers])
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = max(float(np.max(hi - lo)), 1e-12) * 1.1
    mid = 0.5 * (lo + hi)

    def to_px(P):
        q = (P - mid) / span * (SIZE - 40)
        return np.column_stack([SIZE / 2 + q[:, 0], SIZE / 2 - q[:, 1]])

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
             f'viewBox="0 0 {SIZE} {SIZE}">', f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>']
    if c != 0:
        # boundary of the disk model, when it is in view
        r = (SIZE - 40) / span
        cx, cy = to_px(np.zeros((1, 2)))[0]
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="none" stroke="#bbb" '
                     f'stroke-dasharray="4 4"/>')
    for name, P, closed in layers:
        color = PALETTE.get(name.rstrip("0123456789"), "#555")
        parts.append(_polyline(to_px(P), color, closed=closed, dots=name in ("contact", "origin")))
    title = f'{report["scenario_id"]}: {"PASS" if report["passed"] else "FAIL"} (c={c:g})'
    parts.append(f'<text x="10" y="20" font-family="sans-serif" font-size="14">{title}</text>')
    parts.append("</svg>")
    out = Path(out) if out else run_dir / "plot.svg"
    out.write_text("\n".join(parts) + "\n")
    return out
