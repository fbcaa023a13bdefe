"""Exception types shared by every stage of the toolkit."""
from typing import Optional


class SepAdvError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SepAdvError, ValueError):
    """An argument or configuration value is outside its valid range."""


class FormatError(SepAdvError):
    """A file does not follow the container layout it claims to use."""


class UnsupportedFormatError(FormatError):
    """A well-formed file uses an encoding this package does not handle."""


class ArtifactIOError(SepAdvError, OSError):
    """A file could not be read or written."""


class NumericError(SepAdvError, ArithmeticError):
    """A computation produced NaN or Inf where a finite value is required."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class UndefinedMetricError(SepAdvError):
    """A ground metric has no meaningful value for the given signals."""


class PlanValidationError(SepAdvError):
    """An experiment plan violates the white/gray/black condition rules."""


class ConfigError(SepAdvError):
    """A configuration file is missing, unparsable or fails schema validation."""
