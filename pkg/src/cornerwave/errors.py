"""Exception hierarchy.

Validation problems subclass ``ValueError`` and numerical failures subclass
``ArithmeticError`` so callers can catch them with builtin types; the CLI maps
them onto exit codes 2 and 4.
"""


class CornerWaveError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CornerWaveError, ValueError):
    pass


class InvalidLevelError(ValidationError):
    """A perturbation magnitude is negative, non-finite or misplaced."""


class OrderingError(ValidationError):
    """Levels are not strictly increasing where that is required."""


class DuplicateLevelError(OrderingError):
    """Two adjacent levels coincide, which would divide by zero."""


class ShapeError(ValidationError):
    pass


class DataFormatError(ValidationError):
    """Malformed input file (non-numeric cell, ragged row, bad JSON)."""


class InsufficientSamplesError(ValidationError):
    pass


class SessionError(ValidationError):
    """Session state does not match the request (dataset, model, scheme)."""


class NumericalError(CornerWaveError, ArithmeticError):
    pass


class NotPSDError(NumericalError):
    pass


class SingularMatrixError(NumericalError):
    pass
