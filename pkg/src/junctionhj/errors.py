"""Exception types shared across the package."""

from __future__ import annotations


class JunctionHJError(Exception):
    """Base class for every error raised by junctionhj."""


class LevelBelowMinimum(JunctionHJError, ValueError):
    """A generalized inverse was requested below the minimum of the Hamiltonian."""


class BisectionBudgetExceeded(JunctionHJError, RuntimeError):
    pass


class ArityMismatch(JunctionHJError, ValueError):
    pass


class BracketNotFound(JunctionHJError, RuntimeError):
    """No sign change was located below the bracket ceiling."""


class AssumptionViolated(JunctionHJError, ValueError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class CFLViolation(JunctionHJError, RuntimeError):
    pass


class NonpositiveViscosity(JunctionHJError, ValueError):
    pass


class GridMismatch(JunctionHJError, ValueError):
    pass


class ConfigError(JunctionHJError, ValueError):
    pass


class GridTooCoarse(UserWarning):
    """Halving the dynamic-programming step moved the value by more than the tolerance."""
