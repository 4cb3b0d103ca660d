from .catalog import (
    SUITES,
    CatalogError,
    Cell,
    build_scenario,
    cells_for,
    trial_seed,
)
from .executors import OracleExecutor, PolicyExecutor, oracle_pose
from .report import COLUMNS, FORMATS, ReportError, emit_report
from .suites import (
    EXECUTORS,
    PLANNERS,
    HarnessError,
    ResultTable,
    Row,
    SuiteSpec,
    first_skill_succeeded,
    judge_trial,
    retry_success_rates,
    run_suite,
    run_trial,
    single_attempt_rate,
)

__all__ = [
    "COLUMNS",
    "EXECUTORS",
    "FORMATS",
    "PLANNERS",
    "SUITES",
    "CatalogError",
    "Cell",
    "HarnessError",
    "OracleExecutor",
    "PolicyExecutor",
    "ReportError",
    "ResultTable",
    "Row",
    "SuiteSpec",
    "build_scenario",
    "cells_for",
    "emit_report",
    "first_skill_succeeded",
    "judge_trial",
    "oracle_pose",
    "retry_success_rates",
    "run_suite",
    "run_trial",
    "single_attempt_rate",
    "trial_seed",
]
