"""Exception types raised across the package."""


class SpaceSavingError(Exception):
    """Base class for all errors raised by this package."""


class InvalidCapacityError(SpaceSavingError, ValueError):
    """A summary was requested with fewer than one counter."""


class IncompatibleSummariesError(SpaceSavingError, ValueError):
    """Two summaries of different capacity were combined."""


class InvalidWorkersError(SpaceSavingError, ValueError):
    """A decomposition was requested over zero workers."""


class ConfigurationError(SpaceSavingError, ValueError):
    """A run or grid configuration is inconsistent."""


class InvalidUniverseError(SpaceSavingError, ValueError):
    """A Zipf workload was requested over an empty universe."""


class StreamParseError(SpaceSavingError, ValueError):
    """A stream file contains a malformed record.

    Attributes:
        offset: byte offset of the first byte of the offending record.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UndefinedMetricError(SpaceSavingError, ArithmeticError):
    """A metric was evaluated where its formula divides by zero."""
