"""
Exception hierarchy shared by the numerical modules and the CLI
"""
from typing import Optional


class SpatialModelError(Exception):
    """Base class for every error raised by the toolkit"""


class ConfigurationError(SpatialModelError, ValueError):
    """Invalid kernel, taper, range-finder or experiment configuration"""


class UsageError(SpatialModelError, ValueError):
    """Inputs inconsistent with the operation (shapes, sizes, caps)"""


class OutOfRegimeError(SpatialModelError, ValueError):
    """A closed-form bound evaluated outside its domain of validity"""


class FactorizationError(SpatialModelError, ArithmeticError):
    """A Cholesky factorization met a non-positive pivot"""

    def __init__(self, message: str, pivot: Optional[int] = None, pivot_value: Optional[float] = None):
        self.pivot = pivot
        self.pivot_value = pivot_value
        if pivot is not None:
            message = f"{message} (pivot {pivot}, value {pivot_value:.3e})"
        super().__init__(message)


class SolverError(FactorizationError):
    """Failure while applying the inverse or log-determinant of a covariance"""


class NumericalError(SpatialModelError, ArithmeticError):
    """A quantity that must be nonnegative came out below tolerance"""


class SamplerError(SpatialModelError):
    """A Markov chain stage failed; carries the sweep index"""

    def __init__(self, message: str, sweep: Optional[int] = None):
        self.sweep = sweep
        if sweep is not None:
            message = f"sweep {sweep}: {message}"
        super().__init__(message)
