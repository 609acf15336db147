"""Exception types shared across the package."""


class HankelAsymError(Exception):
    """Base class for all package errors."""


class DomainError(HankelAsymError, ValueError):
    """Argument outside the supported domain of a function."""


class ConvergenceError(HankelAsymError, ArithmeticError):
    """An iterative procedure did not converge within its budget.

    ``estimates`` carries the last values seen, for diagnostics.
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class NumericalError(HankelAsymError, ArithmeticError):
    """A numerical failure (non-positive pivot, singular system, internal mismatch)."""


class ValidationError(HankelAsymError, ValueError):
    """Invalid configuration or weight specification."""
