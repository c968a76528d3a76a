"""Exception types shared across the package."""


class TransmuteError(Exception):
    """Base class for package errors."""


class ConstructionError(TransmuteError):
    """A building block (particular solution, basis) could not be constructed."""

    def __init__(self, message, min_abs=None):
        super().__init__(message)
        self.min_abs = min_abs


class NonVanishingError(ConstructionError):
    """The particular solution vanishes on the interval."""


class ConditioningError(TransmuteError):
    """The trace least-squares system is numerically rank deficient."""

    def __init__(self, message, rank, columns):
        super().__init__(message)
        self.rank = rank
        self.columns = columns


class BoundaryConditionError(TransmuteError, ValueError):
    """Both boundary coefficients vanish at the probed spectral parameter."""
