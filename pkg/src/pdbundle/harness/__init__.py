"""Benchmark harness: configuration, runs, property suites and reports."""

from .checks import CheckReport, check_suite
from .config import RunConfig, load_config, parse_method
from .experiment import CSV_HEADER, RunRecord, run_experiment
from .report import report

__all__ = ["CheckReport", "check_suite", "RunConfig", "load_config", "parse_method",
           "CSV_HEADER", "RunRecord", "run_experiment", "report"]
