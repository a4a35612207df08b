"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An operation was called with parameters outside its contract."""


class ScaleRangeError(ValueError):
    """A scale-table inversion was requested outside the table's range.

    Signals that a truncated domain (or tracked grid) was exceeded; callers
    typically widen the domain and retry.
    """
