"""Exception types shared across the package."""


class Su2LabError(Exception):
    """Base class for all package errors."""


class DimensionError(Su2LabError, ValueError):
    """Matrix or state has an incompatible shape."""


class ValidityError(Su2LabError, ValueError):
    """Input violates a documented precondition."""


class SingularityError(Su2LabError, ValueError):
    """A function sampled on the grid produced a non-finite value."""


class UnsupportedConfigurationError(Su2LabError, ValueError):
    """The requested configuration is outside what a routine supports."""


class NumericError(Su2LabError, ArithmeticError):
    """An iterative solver failed to converge or a ratio is ill-defined."""


class QubitBudgetError(Su2LabError, ValueError):
    """Simulation would exceed the dense-simulation qubit budget."""
