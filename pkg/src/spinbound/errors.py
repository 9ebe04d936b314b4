"""Exception types shared across the package.

Every error raised on purpose derives from :class:`SpinboundError`, so the
command-line front end can map failures to exit codes in one place.
"""


class SpinboundError(Exception):
    """Base class for all package errors."""


class DomainError(SpinboundError, ValueError):
    """An argument lies outside the domain of the operation."""


class BoxTooSmall(DomainError):
    """The box does not contain the regions an operation needs."""


class ConstraintViolation(SpinboundError, ValueError):
    """A parameter constraint (for instance on K*delta) is violated."""


class InsufficientData(SpinboundError, ValueError):
    """Too few usable data points for a fit or a tail estimate."""


class ApproximationFailure(SpinboundError, ArithmeticError):
    """The trigonometric approximation did not reach its error budget.

    Attributes
    ----------
    best_error : float
        Smallest sup-grid error reached before giving up.
    """

    def __init__(self, message, best_error):
        super().__init__(message)
        self.best_error = float(best_error)


class DivergedProfile(SpinboundError, ArithmeticError):
    """cosh overflowed while evaluating the functional; delta is too large."""


class SolverFailure(SpinboundError, ArithmeticError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message, residual, iterations=None):
        super().__init__(message)
        self.residual = float(residual)
        self.iterations = iterations


class VacuousBound(SpinboundError, ArithmeticError):
    """No admissible parameter makes the bound decay."""


class ConfigError(SpinboundError, ValueError):
    """An experiment configuration is malformed or names an unknown key."""
