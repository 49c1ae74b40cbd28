"""Exception hierarchy shared by all modules."""


class QMetaPathError(Exception):
    """Base class for every error raised by this package."""


class InvalidQubitError(QMetaPathError, IndexError):
    pass


class InvalidGateError(QMetaPathError, ValueError):
    pass


class CapacityError(QMetaPathError, ValueError):
    pass


class ShapeError(QMetaPathError, ValueError):
    pass


class DegenerateStateError(QMetaPathError, ValueError):
    pass


class DestructiveCancellationError(DegenerateStateError):
    """A weighted sum of circuits cancelled to (numerically) zero norm."""


class ParameterError(QMetaPathError, ValueError):
    pass


class RangeError(QMetaPathError, ValueError):
    pass


class NumericError(QMetaPathError, ArithmeticError):
    pass


class ConfigError(QMetaPathError, ValueError):
    """Invalid or unparsable experiment configuration.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
