"""Agent-based simulator of a production economy run by a central planner."""

from .core import FirmClass, Policy, ProductionType, default_catalog
from .sim import PRESETS, ScenarioConfig, load_config, preset, run_scenario

__all__ = [
    "FirmClass",
    "PRESETS",
    "Policy",
    "ProductionType",
    "ScenarioConfig",
    "load_config",
    "preset",
    "run_scenario",
    "default_catalog",
]
