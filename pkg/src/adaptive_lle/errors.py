"""Shared exception types."""


class NumericalError(RuntimeError):
    """A computation produced a non-finite or unusable numerical result."""
