"""Configuration, Monte Carlo RoC experiments, DoF calibration and the CLI."""

from irsradar.harness.config import ConfigError, ExperimentConfig, load_config
from irsradar.harness.experiment import (
    CalibrationResult,
    RocRecord,
    calibrate_dof,
    run_roc,
    run_scenario_suite,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "CalibrationResult",
    "RocRecord",
    "calibrate_dof",
    "run_roc",
    "run_scenario_suite",
]
