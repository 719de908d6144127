"""Exception types shared across the package."""

from __future__ import annotations


class PolarletError(Exception):
    """Base class for all package errors."""


class DomainError(PolarletError, ValueError):
    """An argument lies outside the supported domain of an operation."""


class NumericError(PolarletError, ArithmeticError):
    """A numerical procedure failed to converge or became ill-conditioned.

    ``partial`` carries the best estimate available at the point of failure
    (or ``None``).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class DataError(PolarletError):
    """Malformed input data (files, meshes, containers)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
