"""Scenario-driven simulation studies and the command-line interface."""

from .checks import design_check, kernel_check, negative_controls, quantile_ci_report
from .cli import cli_main
from .config import ScenarioConfig, load_config, parse_config
from .report import IndicatorReport, render
from .studies import run_quantile_study, run_test_study

__all__ = [
    "IndicatorReport",
    "ScenarioConfig",
    "cli_main",
    "design_check",
    "kernel_check",
    "load_config",
    "negative_controls",
    "parse_config",
    "quantile_ci_report",
    "render",
    "run_quantile_study",
    "run_test_study",
]
