"""Exception and warning types shared across the package."""


class GotError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DispatchError(GotError, ValueError):
    """Points or transports from different spaces were combined."""

    exit_code = 4


class GeometryError(GotError, ValueError):
    """A geometric construction is undefined for the given inputs."""

    exit_code = 4


class IngestionError(GotError, ValueError):
    """Input data could not be turned into points of the declared space."""

    exit_code = 3


class NumericError(GotError, ArithmeticError):
    """An iterative solver failed or a computation under/overflowed."""

    exit_code = 5


class FitWarning(UserWarning):
    """Non-fatal problem encountered while fitting a model."""
