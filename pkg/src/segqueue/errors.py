"""Exception types raised by the analysis, simulation and sweep layers."""


class SegQueueError(Exception):
    """Base class for all package errors."""


class TruncationError(SegQueueError):
    """A series did not reach its tolerance within the allowed number of terms."""

    def __init__(self, message, terms=None):
        super().__init__(message)
        self.terms = terms


class UnstableError(SegQueueError):
    """Offered load is at or above one, so no stationary regime exists."""

    def __init__(self, message, load=None):
        super().__init__(message)
        self.load = load


class NoStablePointError(SegQueueError):
    """Every payload size of a sweep was unstable or failed."""


class TooFewPointsError(SegQueueError):
    """Not enough stable rows to compute a curve statistic."""


class ConfigError(SegQueueError):
    """Invalid configuration, carrying the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
