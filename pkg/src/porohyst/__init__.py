"""Hysteretic poro-thermo-mechanics: Preisach capillarity, plastic stop and heat."""

from ._backend import backend_name
from .constitutive import HypothesisViolation, MaterialParams, validate
from .solver import InitialData, Simulation, SolverConfig, SolverError

__version__ = "0.1.0"

__all__ = [
    "HypothesisViolation",
    "InitialData",
    "MaterialParams",
    "Simulation",
    "SolverConfig",
    "SolverError",
    "backend_name",
    "validate",
]
