"""Exception types raised by the analysis pipeline."""

from __future__ import annotations


class AnalysisError(Exception):
    """Base class for all domain errors."""


class DataFormatError(AnalysisError):
    """Input file does not have the expected layout."""


class DuplicateRowError(AnalysisError):
    """Two rows share the same (ticker, date) key."""


class InsufficientDataError(AnalysisError):
    """Too few samples for the requested computation."""


class DegenerateError(AnalysisError):
    """Input is valid but carries no information (zero variance, constant tail...)."""


class ConvergenceError(AnalysisError):
    """Optimizer stopped before meeting its tolerance.

    ``best_point`` holds the best parameters found and ``best_value`` the
    objective there.
    """

    def __init__(self, message: str, best_point=None, best_value=None):
        super().__init__(message)
        self.best_point = best_point
        self.best_value = best_value
