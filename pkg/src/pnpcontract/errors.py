"""Exception types shared across the package."""


class PnpError(Exception):
    """Base class for all package errors."""


class ConfigError(PnpError):
    """Invalid configuration, flag combination, or input contract violation."""


class NumericalError(PnpError):
    """A numerical routine failed to meet its tolerance or iteration budget."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
