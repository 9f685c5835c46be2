"""Exception hierarchy shared by every module."""


class CaradoryError(Exception):
    """Base class for all errors raised by the package."""


class InputError(CaradoryError, ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad exponent, ...)."""


class InvariantViolation(CaradoryError, ValueError):
    """A data invariant (weights on the simplex, positive radius, ...) does not hold."""


class ConfigurationError(CaradoryError, ValueError):
    """Solver or bound configuration is incomplete or self-contradictory."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DegenerateGradient(CaradoryError, ArithmeticError):
    """The linear oracle received a zero direction; callers treat this as converged."""


class NumericalError(CaradoryError, ArithmeticError):
    """An inner numerical routine failed to reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnsupportedSize(CaradoryError, ValueError):
    """Instance too large for an exhaustive routine."""
