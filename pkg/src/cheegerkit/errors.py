"""Exception hierarchy.

Two families matter for the CLI exit-code contract: ValidationError maps to
exit code 2 (bad input / precondition violated), SolverError maps to exit
code 3 (a numerical procedure failed).
"""


class CheegerKitError(Exception):
    """Base class for all package errors."""


class ValidationError(CheegerKitError):
    """Invalid input, violated precondition or unsupported request."""


class SolverError(CheegerKitError):
    """A numerical procedure failed to produce a result."""


class UnsupportedDomainError(ValidationError):
    """Operation not defined for this container kind."""


class UnsupportedDimensionError(ValidationError):
    """Operation not available in this ambient dimension."""


class InvalidGraphError(ValidationError):
    """Graph function is not strictly positive or is degenerate."""


class ResolutionError(ValidationError):
    """Grid or mesh resolution too coarse for the request."""


class DilationNotClosedError(ValidationError):
    """Dilation requested in a container that is not dilation invariant."""


class EmptySetError(ValidationError):
    """A nonempty mask was required."""


class EmptyDomainError(ValidationError):
    """The discretized domain contains no cells."""


class GridSizeError(ValidationError):
    """Cell count exceeds the limit of the exhaustive solver."""


class SignError(ValidationError):
    """A sign-constrained field violates its constraint."""


class IllPosedError(ValidationError):
    """Boundary value problem lacks a Dirichlet part."""


class HypothesisViolatedError(ValidationError):
    """A hypothesis required by the construction does not hold."""


class NonConvergenceError(SolverError):
    """Iteration cap reached before the tolerance was met."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class LinearSolveError(SolverError):
    """Linear system solve failed."""


class WitnessSearchError(SolverError):
    """Perturbation witness search exhausted its step schedule."""
