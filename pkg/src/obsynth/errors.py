"""Exception types shared across the package.

Everything raised on purpose derives from :class:`ObsynthError`, so callers
that want a single catch-all have one.  Errors carry enough structure
(pivot index, violation list) for programmatic handling where that is
useful; otherwise they are plain messages.
"""

from __future__ import annotations


class ObsynthError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ObsynthError):
    """Matrix or vector dimensions do not conform."""


class NonFiniteError(ObsynthError):
    """An input contains NaN or infinity."""


class SingularMatrixError(ObsynthError):
    """Gaussian elimination met a pivot too small to trust.

    ``pivot_index`` is the elimination step (0-based) at which the pivot
    fell below the tolerance.
    """

    def __init__(self, message: str, pivot_index: int):
        super().__init__(message)
        self.pivot_index = pivot_index


class SolverFailureError(ObsynthError):
    """The LP solver stopped without a usable verdict (iteration cap,
    numerical breakdown)."""


class PreconditionError(ObsynthError):
    """A structural precondition on the input system fails (wrong sign
    pattern, not Metzler, not nonnegative, ...)."""


class InstabilityError(ObsynthError):
    """The system is not stable, so the requested quantity is undefined."""


class MembershipError(ObsynthError):
    """A gain matrix is not admissible for the observer family.

    ``violations`` lists human-readable reasons (one per failed
    condition).
    """

    def __init__(self, message: str, violations: list[str]):
        super().__init__(message)
        self.violations = list(violations)


class UndefinedGainError(ObsynthError):
    """An empirical gain estimate has a vanishing denominator."""


class SimulationError(ObsynthError):
    """Simulation inputs are unusable (bad time grid, bound crossing,
    signal shorter than the horizon)."""


class ProblemFileError(ObsynthError):
    """A problem description file is malformed.  The message names the
    offending key path."""
