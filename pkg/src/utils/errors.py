"""
Error hierarchy shared by the numerical modules and the command-line front end.
Every error carries the CLI exit code it maps to.
"""

EXIT_OK = 0
EXIT_CONDITION_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class MinkvalError(Exception):
    """Base class for all library errors."""

    exit_code = EXIT_NUMERIC


class DomainError(MinkvalError, ValueError):
    """An argument lies outside the range an operation is defined on."""


class DimensionMismatchError(DomainError):
    """Two operands live in different dimensions or truncations."""


class QuadratureError(MinkvalError, RuntimeError):
    """A quadrature rule could not be constructed."""


class UnsupportedProfileError(MinkvalError):
    """A profile without a bounded second derivative was used as a body."""


class InvalidBodyError(MinkvalError):
    """A profile fails the support-function validity test."""


class SingularResolventError(MinkvalError):
    """Some linearization multiplier raised to 2m is numerically 1."""


class NumericalError(MinkvalError, RuntimeError):
    """A numerical self-check failed."""


class ConfigError(MinkvalError):
    """An experiment configuration could not be parsed."""

    exit_code = EXIT_USAGE


def exit_code_for(error: Exception) -> int:
    """Return the CLI exit code for an exception."""
    if isinstance(error, MinkvalError):
        return error.exit_code
    return EXIT_NUMERIC
