"""Exception hierarchy shared across the toolkit."""


class HpqrcError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(HpqrcError, ValueError):
    """Invalid model or generator parameter."""


class ConfigurationError(ParameterError):
    """Physically or structurally invalid configuration."""


class DivergenceError(HpqrcError, ArithmeticError):
    """Non-finite state encountered while iterating a recurrence."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class IngestionError(HpqrcError, ValueError):
    """Malformed or unreadable external data."""


class DegenerateError(HpqrcError, ValueError):
    """Input has zero range or zero variance where spread is required."""


class SizingError(HpqrcError, ValueError):
    """Series or matrix too small for the requested operation."""


class SolverError(HpqrcError, ArithmeticError):
    """Linear system could not be solved."""


class DimensionError(HpqrcError, ValueError):
    """Array shapes do not agree."""


class PairingError(HpqrcError, ValueError):
    """Result sets cannot be matched cell by cell."""
