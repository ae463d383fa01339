"""Exception hierarchy and warning categories shared across the package."""

from __future__ import annotations


class SimulstopError(Exception):
    """Base class for all package errors."""


class ConfigError(SimulstopError):
    """Scenario file or parameter validation failure (CLI exit code 2)."""


class NumericError(SimulstopError):
    """Numerical failure: non-convergence, overflow, ill-posed request (CLI exit code 3)."""


class QuadratureBudgetError(NumericError):
    """Raised when the integrand-evaluation budget is exhausted.

    Carries the partial estimate so callers can inspect how far the
    integration got before giving up.
    """

    def __init__(self, message: str, partial):
        super().__init__(message)
        self.partial = partial


class HorizonExceededError(NumericError):
    """A time beyond the available state-path horizon was requested."""


class UndefinedConditionalError(NumericError):
    """Conditioning event has (numerically) zero probability."""


class UnsupportedScenarioError(SimulstopError):
    """Operation requires a deterministic time scenario (state = elapsed time)."""


class BoundSpecError(ConfigError):
    """Bound hypothesis parameters out of their admissible range."""


class InvalidIntervalError(ConfigError):
    """Interval endpoints out of order."""


class InfiniteMomentError(NumericError):
    """A required second moment diverges."""


class DefectiveDistributionWarning(UserWarning):
    """A marginal law may place mass at infinity (compensator does not diverge)."""
