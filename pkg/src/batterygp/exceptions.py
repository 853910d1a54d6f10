"""Exception hierarchy shared across the package.

Two branches matter for callers: ``ValidationError`` (bad inputs, bad files,
inconsistent shapes) and ``NumericalError`` (linear algebra or optimization
failures).  The CLI maps them to distinct exit codes.
"""


class BatteryGPError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BatteryGPError, ValueError):
    """Input data, configuration, or file content violates a contract."""


class DimensionMismatch(ValidationError):
    """Operands have incompatible shapes."""


class EmptyInput(ValidationError):
    """An operation received an empty vector where data is required."""


class ParseError(ValidationError):
    """A file could not be parsed; message carries row/column context."""


class NonPositiveTemperature(ValidationError):
    """A temperature in Kelvin must be strictly positive."""


class BelowAbsoluteZero(ValidationError):
    """A Celsius temperature at or below -273.15 has no Kelvin image."""


class NonPositiveBase(ValidationError):
    """Polynomial kernel base must be strictly positive for real powers."""


class TooShort(ValidationError):
    """A capacity trajectory has too few points for the requested lag count."""


class TooFewPairs(ValidationError):
    """Not enough training pairs for the requested fold count."""


class UnknownCase(ValidationError):
    """A case id is not present in the dataset."""


class OverlappingSplit(ValidationError):
    """Train and test case ids overlap."""


class NumericalError(BatteryGPError):
    """A numerical routine failed."""


class NotPositiveDefinite(NumericalError):
    """Cholesky factorization failed, even after the jitter ladder."""


class SingularTriangular(NumericalError):
    """A triangular solve hit a zero diagonal entry."""


class AllStartsFailed(NumericalError):
    """Every optimizer restart failed with a numerical error."""
