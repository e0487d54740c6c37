"""Exception hierarchy.

Every error raised on bad input derives from :class:`HssegError`, which the
CLI maps to exit code 2. Anything else escaping is an internal error.
"""


class HssegError(ValueError):
    """Base class for validation errors."""


class NonPowerOfTwoSide(HssegError):
    pass


class ShapeMismatch(HssegError):
    pass


class NonFiniteValue(HssegError):
    pass


class IndexOutOfRange(HssegError, IndexError):
    pass


class GeometryMismatch(HssegError):
    pass


class DimensionMismatch(HssegError):
    pass


class ClassOutOfRange(HssegError):
    pass


class NegativeInput(HssegError):
    pass


class NonPositiveVariance(HssegError):
    pass


class UnsupportedK(HssegError):
    pass


class CovarianceMismatch(HssegError):
    pass


class DegenerateVariance(HssegError):
    pass


class InvalidDimensions(HssegError):
    pass


class InvalidTrainingSet(HssegError):
    pass


class InvalidArguments(HssegError):
    pass


class EmptyCell(HssegError):
    pass


class UnsupportedDimension(HssegError):
    pass


class InvalidCounts(HssegError):
    pass


class FormatError(HssegError):
    """Malformed HSC1 file, CSV or JSON document."""


class ConfigError(HssegError):
    pass


class NumericOverflow(HssegError):
    pass
