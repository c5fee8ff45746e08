"""Exception hierarchy shared by all modules."""


class PdtiError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(PdtiError, ValueError):
    """Shapes or modes do not conform."""


class SymmetryError(PdtiError, ValueError):
    """A tensor expected to be Hermitian is not, beyond tolerance."""


class EvaluationError(PdtiError, ArithmeticError):
    """A scalar function produced non-finite values on a spectrum."""


class DivergenceError(PdtiError, ArithmeticError):
    """An integral over the real line does not converge."""


class ParameterError(PdtiError, ValueError):
    """Invalid parameter values for a profile, sampler or experiment."""


class SingularSymbolError(EvaluationError, ZeroDivisionError):
    """A symbol's denominator vanishes on the spectrum where no limit is allowed."""


class ResampleError(PdtiError, ValueError):
    """A sampled configuration violates a precondition and must be redrawn."""
