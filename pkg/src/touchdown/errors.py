"""Exception hierarchy.

Validation problems (bad parameters, bad geometry) map to CLI exit code 2,
numerical failures to exit code 3.
"""


class TouchdownError(Exception):
    pass


class ValidationError(TouchdownError, ValueError):
    pass


class ResolutionError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class GeometryError(ValidationError):
    pass


class UnsupportedDimensionError(ValidationError):
    pass


class InvalidParameterError(ValidationError):
    pass


class NumericalError(TouchdownError, ArithmeticError):
    pass


class StagnationError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class NoQuenchError(NumericalError):
    """Raised when an operation needs a quenching trajectory and did not get one."""
