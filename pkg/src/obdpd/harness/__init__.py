from .config import PRESETS, ConfigError, ExperimentConfig
from .experiment import (
    FailureBudgetExceeded,
    TrialResult,
    heatmap,
    rms_miss_distance,
    run_trial,
    run_trials,
    sweep,
)

__all__ = [
    "PRESETS",
    "ConfigError",
    "ExperimentConfig",
    "FailureBudgetExceeded",
    "TrialResult",
    "heatmap",
    "rms_miss_distance",
    "run_trial",
    "run_trials",
    "sweep",
]
