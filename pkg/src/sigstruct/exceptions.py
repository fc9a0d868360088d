"""Exception hierarchy shared by every sigstruct module."""


class SigStructError(Exception):
    """Base class for all errors raised by sigstruct."""


class ZeroPolynomialError(SigStructError, ValueError):
    pass


class InversionOfZeroError(SigStructError, ZeroDivisionError):
    pass


class DegreeOverflowError(SigStructError, OverflowError):
    pass


class PoleEvaluationError(SigStructError, ZeroDivisionError):
    pass


class NonSquareError(SigStructError, ValueError):
    pass


class DimensionMismatchError(SigStructError, ValueError):
    pass


class NonFiniteError(SigStructError, FloatingPointError):
    pass


class IllPosedLoopError(SigStructError):
    pass


class SingularStructureError(SigStructError):
    pass


class DegenerateSamplesError(SigStructError):
    pass


class UncontrollableError(SigStructError):
    pass


class AlreadyDesignedError(SigStructError):
    pass


class BadIndexError(SigStructError, IndexError):
    pass


class RetryExhaustedError(SigStructError):
    pass


class MonotonicityViolationError(SigStructError):
    """Absorbing a link increased the number of unstable closed-loop modes."""


class NotStabilizedError(SigStructError):
    pass


class ModelFormatError(SigStructError, ValueError):
    """Malformed model or structure file. ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
