"""Exception hierarchy shared by the analytic and Monte Carlo layers."""


class FluidQError(Exception):
    """Base class for every error raised by fluidq."""


class DomainError(FluidQError, ValueError):
    """An argument lies outside the domain of the requested function."""


class AssumptionError(FluidQError):
    """The model violates a standing assumption (stability, drift sign, ...)."""

    def __init__(self, failed, message=None):
        self.failed = tuple(failed)
        super().__init__(message or "model fails checks: " + ", ".join(self.failed))


class RootFindingError(FluidQError):
    """A bracketing root search did not converge.

    ``bracket`` holds the last ``(lo, hi)`` pair examined.
    """

    def __init__(self, message, bracket):
        self.bracket = bracket
        super().__init__(f"{message} (final bracket {bracket})")


class InversionError(FluidQError):
    """Numerical Laplace inversion failed or the two methods disagree."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class DegenerateArgumentError(DomainError):
    """A two-argument transform was called with alpha == beta."""


class ConsistencyError(FluidQError):
    """Two routes to the same closed-form quantity disagree."""


class SampleSizeError(FluidQError):
    """Too few observations to form a meaningful estimate."""


class UndefinedEstimateError(FluidQError):
    """The estimator's normalising quantity is zero."""
