"""Simulator of an all-fiber polarization-entangled photon-pair source
with Faraday-rotator-mirror birefringence compensation."""

from .errors import (
    ConfigError, DegenerateData, DegenerateMeasurement, FitError, FrmPairsError,
    InvalidArgument, OutOfModel,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateData", "DegenerateMeasurement", "FitError",
    "FrmPairsError", "InvalidArgument", "OutOfModel",
]
