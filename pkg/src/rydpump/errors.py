"""Exception hierarchy shared by the simulation modules and the CLI."""


class RydpumpError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidArgumentError(RydpumpError, ValueError):
    exit_code = 6


class ConfigError(RydpumpError, ValueError):
    """Configuration file could not be parsed or is incomplete."""

    exit_code = 2


class CapacityError(RydpumpError):
    """Requested Hilbert space is larger than the method supports."""

    exit_code = 3


class NumericError(RydpumpError, ArithmeticError):
    exit_code = 4


class StepSizeError(NumericError):
    """Per-step jump probability exceeded the allowed cap; reduce dt."""


class IntegrityError(RydpumpError):
    """A physical invariant (trace, hermiticity, positivity) drifted out of tolerance."""

    exit_code = 5


class DegenerateParameterError(NumericError):
    """Closed-form expression has a vanishing denominator for these parameters."""
