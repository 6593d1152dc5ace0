class HyperoccError(Exception):
    """Base class for all package errors."""


class DataError(HyperoccError, ValueError):
    """Malformed or out-of-range input data."""


class CapExceededError(HyperoccError):
    """An exact computation would exceed its configured size cap."""
