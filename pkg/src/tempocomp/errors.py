"""Exception hierarchy shared by the simulator and the CLI."""


class TempocompError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class ConfigurationError(TempocompError):
    exit_code = 1


class DimensionError(TempocompError, ValueError):
    exit_code = 2


class RangeError(TempocompError, ValueError):
    exit_code = 2


class FormatError(TempocompError):
    exit_code = 2


class DataError(TempocompError):
    exit_code = 2


class NumericError(TempocompError, ArithmeticError):
    exit_code = 3


class CalibrationError(NumericError):
    exit_code = 3
