"""Radiant: sensor-pattern programs compiled into process activity detectors."""

from radiant.iot_config import (
    Band,
    ConfigError,
    Exact,
    IoTSystem,
    LabelError,
    discretize,
    load_iot_config,
    parse_iot_config,
    resolve_label,
)

__version__ = "0.1.0"

__all__ = [
    "Band",
    "ConfigError",
    "Exact",
    "IoTSystem",
    "LabelError",
    "discretize",
    "load_iot_config",
    "parse_iot_config",
    "resolve_label",
]
