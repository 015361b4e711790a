"""Resonances of the two-center Coulomb problem in the semiclassical limit."""

from ._accel import BACKEND
from .core import (
    ComplexEnergy,
    ParameterError,
    ProblemParams,
    Regime,
    ResonanceRecord,
    Sheet,
    energy_from_e,
    energy_from_k,
    validate_params,
)

__all__ = [
    "BACKEND",
    "ComplexEnergy",
    "ParameterError",
    "ProblemParams",
    "Regime",
    "ResonanceRecord",
    "Sheet",
    "energy_from_e",
    "energy_from_k",
    "validate_params",
]

__version__ = "0.1.0"
