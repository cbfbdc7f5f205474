"""
Error hierarchy for the entropic-ricci library.

Every error carries the name the CLI prints on standard error, so class
names are part of the public surface. Solver-type failures derive from
SolverError and map to exit code 2; everything else maps to exit code 1.
"""

from typing import Any, Dict, Optional


class EntropicRicciError(ValueError):
    """Base class for all library errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details: Dict[str, Any] = details or {}

    @property
    def name(self) -> str:
        return type(self).__name__


class SolverError(EntropicRicciError):
    """Numerical procedure did not reach its tolerance."""


# ================================================================
# chain_core
# ================================================================

class NotStochastic(EntropicRicciError):
    pass


class NotIrreducible(EntropicRicciError):
    pass


class NotReversible(EntropicRicciError):
    pass


class BadSpec(EntropicRicciError):
    pass


class BadLambda(EntropicRicciError):
    pass


class WeightSum(EntropicRicciError):
    pass


class EmptyProduct(EntropicRicciError):
    pass


class GeneratorMismatch(EntropicRicciError):
    pass


class NoInverse(EntropicRicciError):
    pass


class ReversibilityFail(EntropicRicciError):
    pass


class ShapeMismatch(EntropicRicciError):
    pass


# ================================================================
# means_theta
# ================================================================

class NegativeInput(EntropicRicciError):
    pass


class BoundaryDerivative(EntropicRicciError):
    pass


class QuadratureFail(SolverError):
    pass


# ================================================================
# transport
# ================================================================

class SolverDiverged(SolverError):
    pass


class Infeasible(EntropicRicciError):
    """Continuity constraints had no solution; indicates a bug upstream."""


class LPFail(SolverError):
    pass


# ================================================================
# geodesics
# ================================================================

class BoundaryState(EntropicRicciError):
    pass


class LeftInterior(EntropicRicciError):
    pass


class StepRejected(EntropicRicciError):
    pass


class NoConvergence(SolverError):
    pass


# ================================================================
# curvature / analysis
# ================================================================

class BoundaryDensity(EntropicRicciError):
    pass


class OptFail(SolverError):
    pass


class BadRate(EntropicRicciError):
    pass


class EigFail(SolverError):
    pass
