"""Command line: ``blaschke run | suite | plot``.

Exit codes: 0 when every verdict is PASS (an empty suite included), 1 when
some check fails or a suite member errors, and 2 when the input given on
the command line is invalid.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .. import __version__
from ..errors import ScenarioError
from .plot import render_svg
from .report import OUT_ENV, default_out_dir, format_table, run_and_write, run_suite
from .scenario import bundled_scenarios_dir, load_scenario, parse_overrides

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blaschke", description="Numerical ball-rolling verification.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    out_help = f"output directory (default: ${OUT_ENV} or ./blaschke-runs)"

    run = sub.add_parser("run", help="run one scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", type=Path, default=None, help=out_help)
    run.add_argument("--tol-override", action="append", default=[], metavar="KEY=VALUE")

    suite = sub.add_parser("suite", help="run every scenario in a directory")
    suite.add_argument("directory", nargs="?", default=None,
                       help="scenario directory (default: the bundled scenarios)")
    suite.add_argument("--out", type=Path, default=None, help=out_help)
    suite.add_argument("--workers", type=int, default=1)
    suite.add_argument("--tol-override", action="append", default=[], metavar="KEY=VALUE")

    plot = sub.add_parser("plot", help="render a run directory to SVG")
    plot.add_argument("run", help="run directory or its report.json")
    plot.add_argument("--out", type=Path, default=None, help="SVG path (default: <run>/plot.svg)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            if not Path(args.run).exists():
                raise ScenarioError(f"no such run: {args.run}", "<run>")
            print(render_svg(args.run, args.out))
            return EXIT_PASS
        overrides = parse_overrides(args.tol_override)
        out = args.out or default_out_dir()
        if args.command == "run":
            sc = load_scenario(args.scenario, overrides)
            rows = [run_and_write(sc, out)]
        else:
            directory = args.directory or bundled_scenarios_dir()
            rows = run_suite(directory, out, max(1, args.workers), overrides)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(format_table(rows))
    return EXIT_PASS if all(r.verdict == "PASS" for r in rows) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
