"""Exception types shared across the package."""


class MixabilityError(Exception):
    """Base class for errors raised by this package."""


class SpecError(MixabilityError, ValueError):
    """A distribution spec or input file is malformed."""


class BudgetExceeded(MixabilityError, RuntimeError):
    """An exact computation would exceed its enumeration budget."""

    def __init__(self, message, required=None, budget=None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class InexactInputError(MixabilityError, ValueError):
    """An exact routine was handed floating point data."""
