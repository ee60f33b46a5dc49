"""Exception types raised across the package."""


class GessError(Exception):
    """Base class for package errors."""


class DimensionError(GessError, ValueError):
    """Vector or matrix shapes do not agree."""


class NotPositiveDefiniteError(GessError, ValueError):
    """Cholesky factorization failed even after adding jitter."""


class PreconditionError(GessError, ValueError):
    """A sampler was started from a state it cannot leave (e.g. zero density)."""


class NonTerminationError(GessError, RuntimeError):
    """A slice loop exceeded its proposal cap."""


class FitError(GessError, RuntimeError):
    """Fitting a multivariate t distribution failed."""


class DataError(GessError, ValueError):
    """Malformed input data (CSV rows, labels, constant columns)."""


class ConfigError(GessError, ValueError):
    """Invalid experiment configuration."""
