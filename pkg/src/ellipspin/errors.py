"""Exception types shared across the package."""


class EllipspinError(Exception):
    """Base class for all package errors."""


class DomainError(EllipspinError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class IntegrationError(EllipspinError, RuntimeError):
    """Adaptive integration failed; carries the last time reached successfully."""

    def __init__(self, message: str, last_good_tau: float):
        super().__init__(f"{message} (last good tau = {last_good_tau!r})")
        self.last_good_tau = last_good_tau


class PathError(EllipspinError, ValueError):
    """A continuation path comes too close to a singular point."""


class StepError(EllipspinError, RuntimeError):
    """A single series re-expansion step failed to converge."""


class LogarithmicCaseError(EllipspinError, ArithmeticError):
    """Frobenius exponents differ by an integer; the second solution needs a
    logarithmic term, which this package does not construct. Switch the
    exponent selection or expand about a different center."""
