"""Scenario harness: load, run, report and plot."""

from .report import run_suite, write_run
from .runner import RunResult, run_scenario
from .scenario import DEFAULT_TOLERANCES, Scenario, load_scenario, scenario_from_dict

__all__ = ["DEFAULT_TOLERANCES", "RunResult", "Scenario", "load_scenario", "run_scenario",
           "run_suite", "scenario_from_dict", "write_run"]
