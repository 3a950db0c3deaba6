"""Command line front end: scenario configs, the trial runner and presets."""

from .scenario import Scenario, load_scenarios, scenario_from_dict, scenario_hash
from .runner import ResultRow, run_scenario, run_beta_job, write_rows, CSV_COLUMNS
from .presets import BetaJob, figure_preset, preset_names
from .analytic import run_analytic, analytic_names

__all__ = [
    "Scenario",
    "load_scenarios",
    "scenario_from_dict",
    "scenario_hash",
    "ResultRow",
    "run_scenario",
    "run_beta_job",
    "write_rows",
    "CSV_COLUMNS",
    "BetaJob",
    "figure_preset",
    "preset_names",
    "run_analytic",
    "analytic_names",
]
