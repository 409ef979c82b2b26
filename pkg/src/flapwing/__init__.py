"""Flapping-wing robot simulator: linkage, multibody dynamics, unsteady aerodynamics and wake."""
from pathlib import Path

from .errors import (ConfigError, FlapwingError, FormatError, GapError, NumericalError,
                     SimulationError)
from .kernels import BACKEND
from .simulator import ForceRecord, SimConfig, run

__version__ = "0.1.0"

DEFAULT_CONFIG = Path(__file__).with_name("data") / "default.yaml"

__all__ = ["BACKEND", "ConfigError", "DEFAULT_CONFIG", "FlapwingError", "ForceRecord", "FormatError",
           "GapError", "NumericalError", "SimConfig", "SimulationError", "run", "__version__"]
