"""Exception hierarchy shared across the package."""


class SparseMVError(Exception):
    """Base class for all errors raised by sparsemv."""


class ConfigurationError(SparseMVError, ValueError):
    """Invalid parameter or configuration value."""


class DataError(SparseMVError, ValueError):
    """Input data is malformed or insufficient."""


class EstimationError(DataError):
    """Mean or covariance estimation failed."""


class IngestionError(DataError):
    """A price or returns file could not be turned into excess returns."""


class InsufficientHistoryError(DataError):
    """Not enough periods to form a single out-of-sample window."""


class DegenerateSeriesError(DataError):
    """A return series has zero dispersion, so its Sharpe ratio is undefined."""


class NonConvergenceError(SparseMVError, RuntimeError):
    """A solver hit its iteration cap before certifying its iterate.

    ``best`` holds the last iterate as a :class:`~sparsemv.objective.Portfolio`
    (uncertified) so callers can still inspect it.
    """

    def __init__(self, message, best=None, window=None):
        super().__init__(message)
        self.best = best
        self.window = window
