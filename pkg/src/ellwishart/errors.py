"""Exception hierarchy shared by every module of the package."""


class EllWishartError(Exception):
    """Base class for all errors raised by ellwishart."""


class ParameterError(EllWishartError, ValueError):
    """A distribution or generator parameter is outside its domain."""


class DimensionError(EllWishartError, ValueError):
    """Operands have incompatible shapes."""


class NotPositiveDefiniteError(EllWishartError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class MomentDoesNotExistError(ParameterError):
    """A requested moment is infinite or undefined for these parameters."""


class DegenerateDistributionError(ParameterError):
    """The distribution is singular, e.g. fewer degrees of freedom than dimensions."""


class MemoryBudgetError(EllWishartError, MemoryError):
    """A computation would need more memory than the caller allowed."""


class SingularSampleError(EllWishartError, ArithmeticError):
    """A random draw was numerically singular and could not be inverted."""


class ConvergenceError(EllWishartError, RuntimeError):
    """An iterative estimator did not converge.

    Attributes
    ----------
    last_iterate : numpy.ndarray
        The estimate after the final iteration.
    residual : float
        Relative Frobenius change at the final iteration.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
