"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """A caller-supplied argument violates a documented precondition."""


class DimensionMismatchError(ArgumentError):
    """A vector has the wrong length for the object it is used with."""


class UnsupportedDimensionError(ArgumentError):
    """The requested operation only exists for low ambient dimension."""


class StateError(RuntimeError):
    """An operation was called on an object in an unusable state."""


class ContractViolationError(RuntimeError):
    """An internal protocol contract was broken (e.g. an increasing
    inverse temperature, or bound inputs inconsistent with a run)."""


class DataError(RuntimeError):
    """A data sequence could not be consumed (names the failing round)."""
