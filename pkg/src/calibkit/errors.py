"""Exception hierarchy shared by every calibkit module."""


class CalibrationError(Exception):
    """Base class for all errors raised on bad input to calibkit."""


class RejectedVector(CalibrationError, ValueError):
    """A raw vector is not a probability vector within tolerance."""


class DimensionMismatch(CalibrationError, ValueError):
    pass


class LabelOutOfRange(CalibrationError, ValueError):
    pass


class EmptyInput(CalibrationError, ValueError):
    pass


class EmptyDataset(EmptyInput):
    pass


class InvalidBinCount(CalibrationError, ValueError):
    pass


class UnsupportedDimension(CalibrationError, ValueError):
    pass


class OutOfRegion(CalibrationError, ValueError):
    pass


class InvalidSpec(CalibrationError, ValueError):
    """A lens, binning or distance option string could not be parsed."""


class QuadratureFailure(CalibrationError, ArithmeticError):
    pass


class NonFiniteInput(CalibrationError, ValueError):
    pass


class NonInvertibleModel(CalibrationError, ValueError):
    pass


class DomainError(CalibrationError, ValueError):
    pass


class ParseError(CalibrationError, ValueError):
    """Malformed dataset file. ``str(err)`` names the file, line and field."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field {field!r}")
        super().__init__(f"{', '.join(parts)}: {message}" if parts else message)


class InconsistentWidth(ParseError):
    pass


class RejectedRow(ParseError, RejectedVector):
    """A dataset row whose prediction fails simplex validation."""
