"""Exception types shared across the simulator.

Configuration problems derive from ConfigError, data problems from DataError; both are
ValueErrors so callers that only care about "bad input" can catch ValueError.
"""

from pathlib import Path
from typing import Optional


class ConfigError(ValueError):
    """Invalid configuration value or combination of values."""


class FoldError(ConfigError):
    """A fold plan cannot be realized on the given dataset."""


class DataError(ValueError):
    """Malformed or out-of-contract data."""


class TraceParseError(DataError):
    """A trace file row could not be accepted."""

    def __init__(self, path: Path | str, line: Optional[int], message: str):
        self.path = Path(path)
        self.line = line
        location = f"{self.path}:{line}" if line is not None else str(self.path)
        super().__init__(f"{location}: {message}")


class AngleRangeError(DataError):
    """An angle lies outside (-180, 180]."""


class TraceTooShortError(DataError):
    """A trace is too short for the requested window and offset."""


class LengthMismatchError(DataError):
    """Paired sequences differ in length (or are empty)."""


class DimensionMismatchError(DataError):
    """An input does not match the model's expected shape."""


class NullInWindowError(DataError):
    """A model input still contains undelivered (NULL) entries."""


class ColdWindowError(DataError):
    """The sliding window has not been filled yet."""


class NonFiniteGradientError(ArithmeticError):
    """A gradient step produced NaN or infinity; the step is abandoned."""
