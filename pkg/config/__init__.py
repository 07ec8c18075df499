from config.run_config import (
    DiagnosticsConfig,
    GridConfig,
    RunConfig,
    RunConfigBuilder,
    StepConfig,
    Tolerances,
)

__all__ = [
    'DiagnosticsConfig',
    'GridConfig',
    'RunConfig',
    'RunConfigBuilder',
    'StepConfig',
    'Tolerances',
]
