"""Exception types raised across the package.

Every rejected input raises RejectedInputError (a ValueError), so callers can
catch one type for validation failures.  The RuntimeError subclasses carry the
diagnostic state named in their docstrings.
"""

from __future__ import annotations


class RejectedInputError(ValueError):
    """Input violates an operation precondition (dims, domain, arity, empties)."""


class UnsupportedError(ValueError):
    """Requested mode or order is outside what the implementation supports."""


class ConvergenceError(RuntimeError):
    """Iterative solver hit its iteration cap; carries the last residual."""

    def __init__(self, message: str, last_residual: float):
        super().__init__(f"{message} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


class InstabilityError(RuntimeError):
    """Solver state left the positive cone; a larger offset usually fixes it."""


class CalibrationError(RuntimeError):
    """Degenerate calibration series; no least-squares scale exists."""


class ConditioningError(RuntimeError):
    """Linear system too ill-conditioned to solve; carries the estimate."""

    def __init__(self, message: str, condition_number: float):
        super().__init__(f"{message} (condition estimate {condition_number:.3e})")
        self.condition_number = condition_number


class NullEventError(RuntimeError):
    """Conditioning event has (numerically) zero probability mass."""


class InitializationError(RuntimeError):
    """No valid starting state found within the allowed number of tries."""


class DegenerateConditionalError(RuntimeError):
    """Conditional slice carries no positive mass anywhere on the grid."""


class RankDeficiencyError(RuntimeError):
    """Unregularized system is rank deficient; add regularization."""


class LeverageError(RuntimeError):
    """A leverage score reached one; leave-one-out rescaling is singular."""


class DivergenceError(RuntimeError):
    """Iterative training loss kept increasing; carries the loss trace."""

    def __init__(self, message: str, loss_trace):
        super().__init__(message)
        self.loss_trace = list(loss_trace)
