"""Exception types shared across the package."""


class RWREError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RWREError, ValueError):
    """Invalid experiment configuration or descriptor."""


class BudgetExceeded(RWREError, MemoryError):
    """A table, kernel or event log would exceed the configured budget."""


class NonConvergence(RWREError, ArithmeticError):
    """An iterative method stopped before meeting its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedDimension(RWREError, ValueError):
    """Exact geometry is only implemented for d <= 3."""


class DomainError(RWREError, ValueError):
    """A grid function is missing values that an operator needs."""


class ExplosionSuspect(RWREError, RuntimeError):
    """A continuous-time path exceeded its event budget before the horizon."""
