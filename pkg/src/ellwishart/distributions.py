"""Elliptical Wishart, Inverse Elliptical Wishart and Normalized Wishart laws.

Densities are evaluated in log domain. Second-order moments are reported as
``E[S]`` and ``Var(vec S) = E[vec S vec S^T] - vec E[S] vec E[S]^T``; the
Kronecker arrangement ``E[S ⊗ S]`` lives in :mod:`ellwishart.kronecker`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import (DegenerateDistributionError, DimensionError,
                     MomentDoesNotExistError, ParameterError)
from .generators import DensityGenerator, Gaussian, StudentT
from .linalg import check_spd, cholesky_lower, commutation_matrix, vec

__all__ = [
    "EwParams",
    "MomentCoefficients",
    "log_multivariate_gamma",
    "ew_log_pdf",
    "iew_log_pdf",
    "log_pdf",
    "coefficients",
    "ew_mean",
    "ew_variance",
    "iew_mean",
    "iew_variance",
    "mean",
    "variance",
    "second_moment",
    "nw_moments",
    "nw_inverse_moments",
]


@dataclass(frozen=True, eq=False)
class EwParams:
    """Parameters of an EW (``inverse=False``) or IEW (``inverse=True``) law.

    Parameters
    ----------
    n : int
        Degrees of freedom, ``n >= p``.
    sigma : array_like
        SPD center matrix of shape ``(p, p)``. Stored as a read-only copy.
    gen : DensityGenerator
        Generator of dimension ``n * p``.
    inverse : bool
    """

    n: int
    sigma: np.ndarray
    gen: DensityGenerator = field(default_factory=Gaussian)
    inverse: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        sigma = check_spd(np.array(self.sigma, dtype=float), name="sigma")
        sigma.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "sigma", sigma)
        if self.n < self.p:
            raise DegenerateDistributionError(
                f"n >= p is required for a non-degenerate law, got n={self.n}, p={self.p}")
        if not isinstance(self.gen, DensityGenerator):
            raise ParameterError("gen must be a DensityGenerator")
        # raises for Kotz generators with alpha + np/2 <= 1
        self.gen.moment_bounds(self.n * self.p)

    @property
    def p(self):
        return self.sigma.shape[0]

    @property
    def np_(self):
        """Generator dimension ``n * p``."""
        return self.n * self.p


def log_multivariate_gamma(a, p):
    """``log Gamma_p(a) = p(p-1)/4 log(pi) + sum_j log Gamma(a - j/2)``."""
    if a <= (p - 1) / 2:
        raise ParameterError(f"multivariate Gamma needs a > (p-1)/2, got a={a}, p={p}")
    j = np.arange(p)
    return p * (p - 1) / 4 * math.log(math.pi) + float(np.sum(gammaln(a - j / 2)))


def _prepare(params, s):
    s = check_spd(s, name="S")
    if s.shape != params.sigma.shape:
        raise DimensionError(f"S has shape {s.shape}, expected {params.sigma.shape}")
    return s


def _common(params):
    n, p = params.n, params.p
    return 0.5 * n * p * math.log(math.pi) - log_multivariate_gamma(0.5 * n, p)


def _logdet(a):
    return 2.0 * float(np.sum(np.log(np.diag(cholesky_lower(a)))))


def _trace_solve(a, b):
    """``tr(a^{-1} b)`` through a Cholesky solve."""
    from scipy.linalg import cho_factor, cho_solve
    return float(np.trace(cho_solve(cho_factor(a, lower=True), b)))


def ew_log_pdf(params: EwParams, s) -> float:
    """Log density of the Elliptical Wishart law at ``S``."""
    if params.inverse:
        raise ParameterError("ew_log_pdf needs inverse=False parameters")
    s = _prepare(params, s)
    n, p = params.n, params.p
    t = _trace_solve(params.sigma, s)
    return (_common(params) - 0.5 * n * _logdet(params.sigma)
            + 0.5 * (n - p - 1) * _logdet(s) + params.gen.log_h(n * p, t))


def iew_log_pdf(params: EwParams, s) -> float:
    """Log density of the Inverse Elliptical Wishart law at ``S``."""
    if not params.inverse:
        raise ParameterError("iew_log_pdf needs inverse=True parameters")
    s = _prepare(params, s)
    n, p = params.n, params.p
    t = _trace_solve(s, params.sigma)
    return (_common(params) + 0.5 * n * _logdet(params.sigma)
            - 0.5 * (n + p + 1) * _logdet(s) + params.gen.log_h(n * p, t))


def log_pdf(params: EwParams, s) -> float:
    return iew_log_pdf(params, s) if params.inverse else ew_log_pdf(params, s)


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class MomentCoefficients:
    """Scalars ``a..f`` entering the mean and variance formulas.

    A coefficient is ``None`` when it is not finite under the given
    parameters; ``missing`` maps its name to the reason.
    """

    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    d: Optional[float] = None
    e: Optional[float] = None
    f: Optional[float] = None
    missing: dict = field(default_factory=dict)

    def require(self, name):
        value = getattr(self, name)
        if value is None:
            raise MomentDoesNotExistError(self.missing[name])
        return value

    def to_dict(self):
        out = {k: getattr(self, k) for k in "abcdef"}
        out["missing"] = dict(self.missing)
        return out


def _gaussian_closed(n, p):
    m = n - p
    out = {"a": float(n), "b": 1.0, "c": 0.0}
    if m > 1:
        out["d"] = 1 / (m - 1)
    if m > 3:
        out["e"] = 1 / (m * (m - 1) * (m - 3))
        out["f"] = 2 / (m * (m - 1) ** 2 * (m - 2) * (m - 3))
    return out


def _t_closed(nu, n, p):
    m = n - p
    out = {}
    if nu > 2:
        out["a"] = nu / (nu - 2) * n
    if nu > 4:
        out["b"] = nu ** 2 / ((nu - 2) * (nu - 4))
        out["c"] = 2 * nu ** 2 / ((nu - 2) ** 2 * (nu - 4))
    if m > 1:
        out["d"] = 1 / (m - 1)
    if m > 3:
        out["e"] = (1 + 2 / nu) / (m * (m - 1) * (m - 3))
        out["f"] = 2 * (1 + (m - 1) * (m - 2) / nu) / (m * (m - 1) ** 2 * (m - 2) * (m - 3))
    return out


def _generic(gen, n, p, missing):
    """Coefficients from the modular moments of ``h_{np}``."""
    d = n * p
    out = {}

    def m(k):
        try:
            return gen.modular_moment(d, k)
        except MomentDoesNotExistError as exc:
            return exc

    m1, m2, mm1, mm2 = m(1), m(2), m(-1), m(-2)
    if isinstance(m1, Exception):
        missing["a"] = str(m1)
    else:
        out["a"] = m1 / p
    if isinstance(m2, Exception):
        missing["b"] = str(m2)
    else:
        out["b"] = m2 / (d * (d + 2))
    if "a" in out and "b" in out:
        out["c"] = out["b"] - (m1 / d) ** 2
    if n <= p + 1:
        missing["d"] = f"inverse mean requires n > p + 1, got n={n}, p={p}"
    elif isinstance(mm1, Exception):
        missing["d"] = str(mm1)
    else:
        out["d"] = (d - 2) / (n - p - 1) * mm1
    if n <= p + 3:
        missing["e"] = f"inverse variance requires n > p + 3, got n={n}, p={p}"
    elif isinstance(mm2, Exception):
        missing["e"] = str(mm2)
    else:
        out["e"] = (d - 2) * (d - 4) / ((n - p) * (n - p - 1) * (n - p - 3)) * mm2
    if "d" in out and "e" in out:
        out["f"] = out["e"] - out["d"] ** 2 / (n - p - 2)
    return out


def coefficients(gen: DensityGenerator, n, p) -> MomentCoefficients:
    """Coefficient sextet ``(a, b, c, d, e, f)`` of the generator ``h_{np}``.

    Gaussian and t generators use their closed forms; others go through the
    modular moments. Absent entries carry a reason in ``missing``.
    """
    n, p = int(n), int(p)
    missing = {}
    generic = _generic(gen, n, p, missing)
    if isinstance(gen, Gaussian):
        values = _gaussian_closed(n, p)
    elif isinstance(gen, StudentT):
        values = {k: v for k, v in _t_closed(gen.nu, n, p).items() if k in generic}
    else:
        values = generic
    for name in "abcdef":
        if name not in values and name not in missing:
            # c and f are absent because a component is
            deps = {"c": "a and b", "f": "d and e"}.get(name, name)
            missing[name] = f"{name} needs {deps}, which do not exist here"
        if name in values:
            missing.pop(name, None)
    if isinstance(gen, StudentT):
        for name, cond in (("a", "nu>2 for mean"), ("b", "nu>4 for variance"),
                           ("c", "nu>4 for variance")):
            if name not in values:
                missing[name] = f"t-: requires {cond}"
    return MomentCoefficients(**values, missing=missing)


# ---------------------------------------------------------------------------
# moments


def _i_plus_k(p):
    return np.eye(p * p) + commutation_matrix(p, p).to_dense()


def _need(coef, name, what):
    value = getattr(coef, name)
    if value is None:
        raise MomentDoesNotExistError(f"{what} does not exist: {coef.missing[name]}")
    return value


def ew_mean(params: EwParams):
    """``E[S] = a Sigma``."""
    coef = coefficients(params.gen, params.n, params.p)
    return _need(coef, "a", "EW mean") * params.sigma


def ew_variance(params: EwParams):
    """``Var(vec S) = n b (I + K)(Sigma ⊗ Sigma) + n^2 c vec(Sigma) vec(Sigma)^T``."""
    coef = coefficients(params.gen, params.n, params.p)
    b = _need(coef, "b", "EW variance")
    c = _need(coef, "c", "EW variance")
    n, p, s = params.n, params.p, params.sigma
    v = vec(s)
    return n * b * (_i_plus_k(p) @ np.kron(s, s)) + n * n * c * np.outer(v, v)


def iew_mean(params: EwParams):
    """``E[S] = d Sigma``; requires ``n > p + 1``."""
    coef = coefficients(params.gen, params.n, params.p)
    return _need(coef, "d", "IEW mean") * params.sigma


def iew_variance(params: EwParams):
    """``Var(vec S) = e (I + K)(Sigma ⊗ Sigma) + (n-p-2) f vec(Sigma) vec(Sigma)^T``."""
    coef = coefficients(params.gen, params.n, params.p)
    e = _need(coef, "e", "IEW variance")
    f = _need(coef, "f", "IEW variance")
    n, p, s = params.n, params.p, params.sigma
    v = vec(s)
    return e * (_i_plus_k(p) @ np.kron(s, s)) + (n - p - 2) * f * np.outer(v, v)


def mean(params: EwParams):
    return iew_mean(params) if params.inverse else ew_mean(params)


def variance(params: EwParams):
    return iew_variance(params) if params.inverse else ew_variance(params)


def second_moment(params: EwParams):
    """``E[vec S vec S^T]`` (variance plus the mean outer product)."""
    v = vec(mean(params))
    return variance(params) + np.outer(v, v)


def nw_moments(n, p):
    """``E[V]`` and ``E[vec V vec V^T]`` for ``V ~ NW(n, p)``."""
    n, p = int(n), int(p)
    if n < p:
        raise DegenerateDistributionError(f"NW(n, p) needs n >= p, got n={n}, p={p}")
    d = n * p
    v = vec(np.eye(p))
    second = (n * _i_plus_k(p) + n * n * np.outer(v, v)) / (d * (d + 2))
    return np.eye(p) / p, second


def nw_inverse_moments(n, p):
    """``E[V^{-1}]`` and ``E[vec V^{-1} vec V^{-1}^T]``; requires ``n > p + 3``."""
    n, p = int(n), int(p)
    if n <= p + 3:
        raise MomentDoesNotExistError(
            f"Normalized Wishart inverse moments require n > p + 3, got n={n}, p={p}")
    d = n * p
    v = vec(np.eye(p))
    mean_inv = (d - 2) / (n - p - 1) * np.eye(p)
    scale = (d - 2) * (d - 4) / ((n - p) * (n - p - 1) * (n - p - 3))
    second = scale * (_i_plus_k(p) + (n - p - 2) * np.outer(v, v))
    return mean_inv, second
