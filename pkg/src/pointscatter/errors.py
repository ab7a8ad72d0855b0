"""Exception hierarchy shared by all modules."""


class ScatterError(Exception):
    """Base class for every error raised by the package."""


class DomainError(ScatterError, ValueError):
    """Argument outside the domain of a function (z <= 0, bad dimension, ...)."""


class ShapeError(ScatterError, ValueError):
    pass


class DistinctnessError(ScatterError, ValueError):
    """Two scatterers (or frequency vectors) coincide."""


class SingularityError(ScatterError, ValueError):
    """Evaluation point sits on a scatterer or source point."""


class SingularMatrixError(ScatterError, ArithmeticError):
    """Pivot fell below the relative threshold; det A(kappa) != 0 is violated."""


class OffShellError(ScatterError, ValueError):
    """Direction vector does not lie on the sphere of radius kappa."""


class NonConvergenceError(ScatterError, ArithmeticError):
    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class DegenerateRayError(ScatterError, ArithmeticError):
    """The oracle vanishes along a sample ray."""


class IllSeparatedError(ScatterError, ArithmeticError):
    """The dominant exponential term could not be isolated."""


class UndeterminedStrengthError(ScatterError):
    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class ConstructionError(ScatterError, ValueError):
    """Preconditions of a counterexample construction do not hold."""


class NoZeroFoundError(ScatterError):
    """No zero of the total field was located in the search region."""


class ParseError(ScatterError, ValueError):
    pass
