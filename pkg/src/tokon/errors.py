"""Exception types shared across the tokon package."""


class TokonError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(TokonError):
    pass


class NonFiniteValue(TokonError):
    """A series or parameter contained NaN or infinity."""


class DegenerateVariance(TokonError):
    """All pooled calibration values are equal; no scale can be estimated."""


class LengthMismatch(TokonError):
    pass


class AllForecastsFailed(TokonError):
    """Every calibration record failed during a probe-cost evaluation."""


class NoNumbers(TokonError):
    """A forecaster reply contained no parseable numbers."""


class TooFewNumbers(TokonError):
    """A forecaster reply contained fewer numbers than the horizon."""

    def __init__(self, found: int, needed: int):
        super().__init__(f"found {found} numbers, need {needed}")
        self.found = found
        self.needed = needed


class NetworkError(TokonError):
    """Transient transport failure talking to a remote backend (retryable)."""


class AuthError(TokonError):
    """Missing or rejected API credentials (not retryable)."""


class MalformedLine(TokonError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number


class DuplicateRank(TokonError):
    pass


class UnencodableByte(TokonError):
    """The loaded vocabulary lacks a base byte present in the input text."""


class MissingColumn(TokonError):
    pass


class UnparsableRow(TokonError):
    def __init__(self, row_number: int, reason: str):
        super().__init__(f"row {row_number}: {reason}")
        self.row_number = row_number


class InsufficientSeries(TokonError):
    """The source file cannot fill the requested per-length record counts."""


class SchemaViolation(TokonError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number


class NoSuccessfulSeries(TokonError):
    pass


class NonPositiveBaseline(TokonError):
    pass
