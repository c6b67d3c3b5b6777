"""Semantic exception hierarchy shared by all modules."""


class CopulaBoundsError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CopulaBoundsError, ValueError):
    """Parameter value outside the family's open domain."""


class DefinitenessError(CopulaBoundsError, ValueError):
    """A matrix that must be positive definite is not.

    Attributes:
        pivot: 0-based index of the first failing Cholesky pivot, or None
            when the failure was detected by other means.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class NotAvailableError(CopulaBoundsError, ValueError):
    """A closed-form expression was requested for a family that has none."""


class DataError(CopulaBoundsError, ValueError):
    """Input data violates a structural requirement (non-finite entries, shape)."""
