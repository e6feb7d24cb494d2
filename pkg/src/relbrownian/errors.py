"""Exception types raised across the package."""


class RelBrownianError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RelBrownianError, ValueError):
    """Invalid simulation or solver configuration."""


class DomainError(RelBrownianError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(RelBrownianError, ArithmeticError):
    """Non-finite values or non-converging numerics."""


class InsufficientDataError(RelBrownianError, ValueError):
    """Too few samples to form an estimate."""


class InstabilityError(NumericalError):
    """Spectral growth factor beyond the overflow threshold."""
