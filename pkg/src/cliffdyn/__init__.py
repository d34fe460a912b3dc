"""Clifford-space dynamics of relativistic particles, U(N) ensembles, matrix
mechanics and Clifford strings."""

from .algebra import AlgebraContext, CVector, Multivector, inner, make_algebra
from .errors import (
    CapacityError,
    CliffdynError,
    ConfigError,
    ContextError,
    DegenerateError,
    DegenerateMetricError,
    DomainError,
    EinbeinError,
    FrameError,
    NotGaugeableError,
    TurningPointError,
    ValidationError,
)
from .particle import EinbeinProfile, evolve
from .spinors import PhasePoint, SpinorField, resolve_hermitian, resolve_phase_point

__version__ = "0.1.0"

__all__ = [
    "AlgebraContext", "CVector", "Multivector", "inner", "make_algebra",
    "EinbeinProfile", "evolve", "PhasePoint", "SpinorField", "resolve_hermitian", "resolve_phase_point",
    "CapacityError", "CliffdynError", "ConfigError", "ContextError", "DegenerateError", "DegenerateMetricError",
    "DomainError", "EinbeinError", "FrameError", "NotGaugeableError", "TurningPointError", "ValidationError",
]
