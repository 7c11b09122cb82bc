"""Outage, rate and load of cross-tier cooperative transmission in two-tier networks."""

from .model import (
    ALL_SCHEMES,
    ConfigError,
    MetricsReport,
    Mode,
    ModeProbabilities,
    NetworkConfig,
    Scheme,
    TierParams,
    default_config,
    validate,
)

__all__ = [
    "ALL_SCHEMES",
    "ConfigError",
    "MetricsReport",
    "Mode",
    "ModeProbabilities",
    "NetworkConfig",
    "Scheme",
    "TierParams",
    "default_config",
    "validate",
]
__version__ = "0.1.0"
