from .config import ConfigError, ExperimentConfig, PolicySpec, load_configs
from .experiment import ExperimentResult, logging_grid, run_experiment
from .output import emit_csv

__all__ = ["ConfigError", "ExperimentConfig", "ExperimentResult", "PolicySpec", "emit_csv", "load_configs",
           "logging_grid", "run_experiment"]
