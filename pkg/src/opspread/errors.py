"""Exception hierarchy shared by all modules."""


class OpspreadError(Exception):
    """Base class for all package errors."""


class InvalidInputError(OpspreadError):
    """Input violates a documented precondition."""


class NumericalFailureError(OpspreadError):
    """A linear-algebra routine failed to converge or lost required structure."""


class ResourceLimitError(OpspreadError):
    """A size cap (ED dimension, hard bond-dimension cap) would be exceeded."""


class ConfigError(OpspreadError):
    """Run configuration is malformed or inconsistent."""


class ProtocolIncompleteError(OpspreadError):
    """The backflow protocol found no density peak within the simulated window.

    Carries the monitored trace so callers can inspect or report it.
    """

    def __init__(self, message, times=None, trace=None):
        super().__init__(message)
        self.times = times
        self.trace = trace
