"""Exception types raised by the estimation pipeline."""


class DoaError(Exception):
    """Base class for all package errors."""


class DegenerateDataError(DoaError):
    """Snapshot data carries no usable signal (zero or noise-level accumulators)."""


class ConvergenceError(DoaError):
    """An iterative numerical routine hit its iteration cap."""


class UnsupportedCombinationError(DoaError):
    """Requested algorithm cannot operate under the decided event."""
