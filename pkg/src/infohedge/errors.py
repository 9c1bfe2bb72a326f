"""Exception types shared across the package."""


class InfohedgeError(Exception):
    """Base class for all package errors."""


class DomainError(InfohedgeError, ValueError):
    """Input outside the mathematical domain of an operation."""


class UnsupportedOperationError(InfohedgeError):
    """Operation not defined for this generator (non-smooth f)."""


class SaturationError(InfohedgeError):
    """Requested inverse-derivative value at or above the attainable range."""

    def __init__(self, message, boundary):
        super().__init__(message)
        self.boundary = boundary


class NumericFailureError(InfohedgeError):
    """An iterative routine diverged or lost its bracket."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(InfohedgeError, ValueError):
    """Invalid configuration, CLI argument, or input file."""
