"""Scenario configs, batch runner, plots, and the command-line entry point."""

from .config import (
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    builtin_scenarios,
    emit_scenarios,
    load_scenarios,
    parse_scenarios,
)
from .runner import (
    aggregate_reports,
    conjecture_experiment,
    format_report,
    run_audit,
    run_gamma_star,
    run_scenario,
)

__all__ = [
    "Scenario",
    "ScenarioParseError",
    "ScenarioValidationError",
    "aggregate_reports",
    "builtin_scenarios",
    "conjecture_experiment",
    "emit_scenarios",
    "format_report",
    "load_scenarios",
    "parse_scenarios",
    "run_audit",
    "run_gamma_star",
    "run_scenario",
]
