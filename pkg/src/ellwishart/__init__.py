"""Elliptical Wishart and inverse elliptical Wishart distributions.

Densities, samplers, closed-form and Kronecker moments, and goodness-of-fit
tools for random SPD matrices built from elliptically distributed data.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .distributions import (EwParams, MomentCoefficients, coefficients, log_pdf, mean,
                            nw_inverse_moments, nw_moments, second_moment, variance)
from .errors import (ConvergenceError, DegenerateDistributionError, DimensionError,
                     EllWishartError, MemoryBudgetError, MomentDoesNotExistError,
                     NotPositiveDefiniteError, ParameterError, SingularSampleError)
from .fitting import (FitReport, StatisticKind, fit_report, ks_two_sample, mle_t_wishart,
                      mle_wishart, statistic, statistics)
from .generators import DensityGenerator, Gaussian, GeneralizedGaussian, Kotz, StudentT
from .kronecker import KronMomentRequest, kron_moment, kron_moment_matrix, mc_kron_moment
from .linalg import PermSumOperator, commutation_matrix
from .sampling import SamplerMethod, sample

__all__ = [
    "__version__", "BACKEND",
    "EwParams", "MomentCoefficients", "coefficients", "log_pdf", "mean", "variance",
    "second_moment", "nw_moments", "nw_inverse_moments",
    "DensityGenerator", "Gaussian", "StudentT", "GeneralizedGaussian", "Kotz",
    "SamplerMethod", "sample",
    "KronMomentRequest", "kron_moment", "kron_moment_matrix", "mc_kron_moment",
    "PermSumOperator", "commutation_matrix",
    "StatisticKind", "statistic", "statistics", "ks_two_sample", "mle_wishart",
    "mle_t_wishart", "fit_report", "FitReport",
    "EllWishartError", "ParameterError", "DimensionError", "NotPositiveDefiniteError",
    "MomentDoesNotExistError", "DegenerateDistributionError", "MemoryBudgetError",
    "SingularSampleError", "ConvergenceError",
]
