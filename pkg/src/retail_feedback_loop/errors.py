"""Exception hierarchy shared by the library and the command-line runners."""

from __future__ import annotations


class SimulatorError(Exception):
    """Base class for all errors raised by retail_feedback_loop.

    Each subclass carries the process exit code the CLI reports for it.
    """

    exit_code = 3


class ConfigurationError(SimulatorError, ValueError):
    """Raised for invalid configuration keys, values, or column mappings."""

    exit_code = 1


class DataError(SimulatorError, ValueError):
    """Raised when input data is missing, malformed, or insufficient."""

    exit_code = 2


class EmptyLogError(DataError):
    """Raised when an operation needs at least one interaction."""

    def __init__(self, message: str = "no interactions") -> None:
        super().__init__(message)


class RowParseError(DataError):
    """Raised in strict ingestion mode when a CSV row cannot be parsed."""

    def __init__(self, row: int, reason: str) -> None:
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class MetricError(SimulatorError, ValueError):
    """Raised when a metric is undefined for its input."""

    exit_code = 2


class ModelError(SimulatorError, RuntimeError):
    """Raised when a recommender cannot be trained or queried."""


class SimulationError(SimulatorError, RuntimeError):
    """Raised when the simulation loop reaches an inconsistent state."""
