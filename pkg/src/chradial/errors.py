"""Exception hierarchy shared by the solver modules."""


class ChradialError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ChradialError, ValueError):
    """A precondition on an argument was violated."""


class NonFiniteError(ChradialError):
    """A field produced NaN or Inf values."""


class ConvergenceError(ChradialError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BracketError(ChradialError):
    """A root bracket could not be established."""


class FeasibilityError(ChradialError, ValueError):
    """Parameters lie outside the regime where the formula applies."""


class DomainTooSmallError(ChradialError):
    """The requested free-boundary radius exceeds the domain radius."""


class BlowUpError(ChradialError):
    """Time integration produced non-finite or absurdly large values."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class StabilityError(ChradialError):
    """The explicit time step violates the stability guard."""


class ConfigError(ChradialError, ValueError):
    """Configuration file or override could not be parsed or validated."""
