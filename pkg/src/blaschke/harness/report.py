"""Writing run directories and running scenario suites.

``report.json`` is a pure function of the scenario and the package version:
keys are sorted, floats are written with ``repr`` precision and no
timestamps or timings appear. Those go to ``record.json`` instead.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from .. import __version__
from ..errors import ScenarioError
from .runner import RunResult, run_scenario
from .scenario import Scenario, load_scenario, report_schema

OUT_ENV = "BLASCHKE_OUT"
DEFAULT_OUT = "blaschke-runs"


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


def _clean(obj):
    """Convert numpy scalars / arrays and non-finite floats to JSON values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def report_dict(sc: Scenario, res: RunResult) -> dict:
    doc = res.report.to_dict()
    doc.update(
        module=sc.module,
        version=__version__,
        input_hash=sc.input_hash,
        extras=res.extras,
        sidecars=sorted(res.sidecars),
    )
    if res.error is not None:
        doc["error"] = res.error
    return _clean(doc)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_run(sc: Scenario, res: RunResult, out_dir) -> Path:
    """Write ``<out>/<id>/`` with report.json, record.json and the sidecars."""
    run_dir = Path(out_dir) / sc.id
    run_dir.mkdir(parents=True, exist_ok=True)
    report = report_dict(sc, res)
    jsonschema.validate(report, report_schema())
    (run_dir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    record = {
        "scenario_id": sc.id,
        "version": __version__,
        "input_hash": sc.input_hash,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "runtime_s": res.runtime,
        "source": sc.source,
        "scenario": sc.raw,
        "passed": res.report.passed,
    }
    (run_dir / "record.json").write_text(json.dumps(_clean(record), sort_keys=True, indent=2) + "\n")
    for name, side in sorted(res.sidecars.items()):
        write_csv(run_dir / name, side.header, side.rows)
    return run_dir


@dataclass
class SuiteRow:
    id: str
    module: str
    verdict: str          # PASS, FAIL or ERROR
    worst_margin: float
    failing: list
    runtime: float
    message: str = ""


def run_and_write(sc: Scenario, out_dir) -> SuiteRow:
    res = run_scenario(sc)
    write_run(sc, res, out_dir)
    rep = res.report
    verdict = "ERROR" if res.error else ("PASS" if rep.passed else "FAIL")
    return SuiteRow(sc.id, sc.module, verdict, rep.worst_margin, rep.failing, res.runtime, res.error or "")


def _job(args) -> SuiteRow:
    path, out_dir, overrides = args
    try:
        sc = load_scenario(path, overrides)
    except ScenarioError as exc:
        return SuiteRow(Path(path).stem, "?", "ERROR", -math.inf, [], 0.0, str(exc))
    return run_and_write(sc, out_dir)


def run_suite(directory, out_dir, workers: int = 1, overrides: dict | None = None) -> list[SuiteRow]:
    """Run every ``*.json`` scenario directly inside ``directory``.

    Rows come back sorted by scenario id whatever the worker count, and
    ``summary.csv`` holds no timing so that repeated runs are identical.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ScenarioError(f"no such scenario directory: {directory}", "<dir>")
    paths = sorted(directory.glob("*.json"))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(str(p), str(out_dir), overrides) for p in paths]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_job, jobs))
    else:
        rows = [_job(j) for j in jobs]
    rows.sort(key=lambda r: r.id)
    write_csv(out_dir / "summary.csv", ["id", "module", "verdict", "worst_margin", "failing"],
              [[r.id, r.module, r.verdict, r.worst_margin, ";".join(r.failing)] for r in rows])
    write_csv(out_dir / "timing.csv", ["id", "runtime_s"], [[r.id, r.runtime] for r in rows])
    return rows


def format_table(rows: list[SuiteRow]) -> str:
    head = f"{'id':<28} {'module':<15} {'verdict':<7} {'worst_margin':>13} {'runtime':>8}  failing"
    lines = [head, "-" * len(head)]
    for r in rows:
        failing = ",".join(r.failing) or r.message
        lines.append(f"{r.id:<28} {r.module:<15} {r.verdict:<7} {r.worst_margin:>13.3e} "
                     f"{r.runtime:>7.2f}s  {failing}")
    return "\n".join(lines)
