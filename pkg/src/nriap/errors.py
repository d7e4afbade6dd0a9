"""Exception hierarchy. CLI exit codes key off these classes."""


class NriapError(Exception):
    """Base class for package errors."""


class ConfigError(NriapError, ValueError):
    pass


class DataError(NriapError, ValueError):
    pass


class DomainError(NriapError, ValueError):
    """Argument outside the domain of a function or table."""


class NonIntegrableError(NriapError, ArithmeticError):
    """A mean functional whose transform h does not exist."""


class NumericError(NriapError, ArithmeticError):
    pass


class ToleranceError(NumericError):
    """A quadrature or root finder missed its target tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DegeneratePathError(NumericError):
    """A jump path with zero total mass where a positive one is needed."""


class UnsupportedObservationError(NumericError):
    """An observation with zero probability under the current model."""
