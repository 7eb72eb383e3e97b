"""Exception hierarchy shared by all modules."""


class TailCauseError(Exception):
    """Base class for package errors."""


class ParameterError(TailCauseError, ValueError):
    """Invalid argument value or inconsistent configuration."""


class InsufficientDataError(TailCauseError):
    """Too few observations for the requested computation."""


class NoExtremeEventsError(InsufficientDataError):
    """No row exceeds the marginal thresholds."""


class FitError(TailCauseError):
    """A generalized Pareto fit failed to converge.

    The optimizer result is kept on ``diagnostics`` so callers can report it.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NonIdentifiableError(TailCauseError):
    """All margins are at zero Wasserstein distance; the score is undefined."""


class HeavyWeightError(TailCauseError):
    """Importance resampling pool is dominated by a few heavy weights."""


class DataError(TailCauseError):
    """Malformed input file (non-numeric cell, ragged row, missing column)."""
