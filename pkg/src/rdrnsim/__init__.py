"""Deterministic emulator of the RDRN orderwire control plane."""

from .config import ConfigError, ScenarioConfig, load_config, parse_config, serialize_config
from .scenario import RunMetrics, compare_golden, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "RunMetrics",
    "ScenarioConfig",
    "compare_golden",
    "load_config",
    "parse_config",
    "run_scenario",
    "serialize_config",
]
