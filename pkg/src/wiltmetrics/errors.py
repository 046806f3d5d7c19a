"""Exception types shared across the package."""


class WiltError(Exception):
    """Base class for all package errors."""


class ValidationError(WiltError):
    """Invalid input value or malformed manifest."""


class DimensionMismatchError(WiltError):
    """Rasters of incompatible shapes were combined."""


class SingularSystemError(WiltError):
    """Least-squares system is rank deficient."""


class DegenerateStemError(WiltError):
    """Stem mask is empty or spans fewer than two rows."""


class UndefinedMetricError(WiltError):
    """A metric is undefined for the given input (e.g. empty mask)."""
