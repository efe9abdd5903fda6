"""Configuration module for retail-feedback-loop."""

from .settings import (
    KNOWN_KEYS,
    MODEL_IDS,
    DatasetSpec,
    ExperimentConfig,
    MetricSettings,
    ModelSettings,
    SimulationConfig,
    SweepSettings,
    SyntheticSettings,
    load_experiment_config,
    parse_overrides,
)

__all__ = [
    "DatasetSpec",
    "ExperimentConfig",
    "KNOWN_KEYS",
    "MODEL_IDS",
    "MetricSettings",
    "ModelSettings",
    "SimulationConfig",
    "SweepSettings",
    "SyntheticSettings",
    "load_experiment_config",
    "parse_overrides",
]
