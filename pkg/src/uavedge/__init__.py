"""Cache refreshing and task offloading for timely status updates in UAV-assisted vehicular networks."""

from .config import ConfigError, ExperimentConfig, load_config
from .env import ActionPlan, StepOutcome, VehicularEnv

__version__ = "0.1.0"

__all__ = ["ActionPlan", "ConfigError", "ExperimentConfig", "StepOutcome", "VehicularEnv", "load_config"]
