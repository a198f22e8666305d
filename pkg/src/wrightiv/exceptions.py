"""Exception and warning types shared across the package."""


class WrightError(Exception):
    """Base class for package errors."""


class DegenerateSystemError(WrightError, ValueError):
    """Demand and supply slopes coincide, so the equilibrium is not unique."""


class DimensionError(WrightError, ValueError):
    """Array shapes disagree with the declared shifter layout."""


class SchemaError(WrightError, ValueError):
    """Malformed input file or configuration.

    ``line`` is the 1-based line number when the problem can be located.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IdentificationError(WrightError, ArithmeticError):
    """The moment Jacobian is (numerically) rank deficient.

    ``eigenvalue`` holds the offending smallest eigenvalue of G'AG.
    """

    def __init__(self, message, eigenvalue=None):
        self.eigenvalue = eigenvalue
        super().__init__(message)


class SingularCovarianceError(WrightError, ArithmeticError):
    """A moment covariance could not be inverted, even after ridging."""


class LassoConvergenceError(WrightError, RuntimeError):
    """Coordinate descent hit the sweep limit. ``coefficients`` is the last iterate."""

    def __init__(self, message, coefficients=None, intercept=0.0):
        self.coefficients = coefficients
        self.intercept = intercept
        super().__init__(message)


class SimulationError(WrightError, RuntimeError):
    """Too many simulation draws failed."""


class GraphError(WrightError, ValueError):
    """Invalid DAG construction or query."""


class GraphParseError(GraphError, SchemaError):
    """Malformed edge-list text."""


class RidgeWarning(RuntimeWarning):
    """A near-singular covariance was regularised before inversion."""


class BoundaryWarning(RuntimeWarning):
    """An optimiser stopped on the edge of the parameter box."""
