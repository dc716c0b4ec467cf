"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`BesselSymError`,
so callers (the CLI in particular) can map families of failures to exit codes.
"""

from __future__ import annotations


class BesselSymError(Exception):
    """Base class for all package errors."""


class DomainError(BesselSymError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class SingularityError(DomainError):
    """Kernel evaluated at the origin where it diverges (alpha <= dim)."""


class AlignmentError(DomainError):
    """A reflection plane does not sit on the half-grid."""


class ShapeMismatchError(BesselSymError, ValueError):
    """Two grid objects live on different grids."""


class UndefinedRatioError(BesselSymError, ArithmeticError):
    """A norm ratio was requested for a vanishing denominator."""


class PreconditionError(BesselSymError, ValueError):
    """An exponent hypothesis (e.g. on q) is violated."""


class NumericalError(BesselSymError, ArithmeticError):
    """Base class for failures of a numerical procedure."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate


class SolverError(NumericalError):
    """Base class for fixed-point solver failures; carries the trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class SolverDivergence(SolverError):
    pass


class SolverNotConverged(SolverError):
    pass


class AmbiguousCenterError(BesselSymError):
    """Several separated points attain the global maximum."""

    def __init__(self, message: str, candidates):
        super().__init__(message)
        self.candidates = candidates


class CostGuardError(BesselSymError):
    """An O(N^2) oracle was requested on a grid that is too large."""


class SchemaError(BesselSymError, ValueError):
    """A file does not match its declared schema, or disagrees with the config."""


class ConfigError(BesselSymError, ValueError):
    """A run configuration is malformed or violates an invariant."""
