"""Nonlinear Compton scattering of an electron beam in a squeezed plane-wave pulse."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GridError,
    NumericalError,
    ParameterError,
    StepSizeError,
    TruncatedPulseError,
    WindowError,
)
from .units import BeamParams, PulseParams, SqueezeParams

__all__ = [
    "__version__",
    "BeamParams",
    "ConfigError",
    "GridError",
    "NumericalError",
    "ParameterError",
    "PulseParams",
    "SqueezeParams",
    "StepSizeError",
    "TruncatedPulseError",
    "WindowError",
]
