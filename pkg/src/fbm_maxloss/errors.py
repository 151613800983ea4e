"""Exception hierarchy shared across the package."""


class FbmError(ValueError):
    """Base class for all package errors."""


class DomainError(FbmError):
    """An argument lies outside the domain of the formula."""


class RegimeError(FbmError):
    """Hurst parameter outside the range where a bound has been established."""


class ValidationError(FbmError):
    """Malformed input data (NaN values, wrong lengths, bad configuration)."""


class SizeError(FbmError):
    """Problem size above the supported limit."""


class NotPositiveDefiniteError(FbmError):
    """Cholesky factorization met a non-positive pivot."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix not positive definite (pivot {pivot})")
