"""Density generators of elliptical laws and their second-order modular.

A density generator ``h_d`` defines a ``d``-dimensional elliptical density
through ``x -> |Sigma|^{-1/2} h_d(x^T Sigma^{-1} x)``. Four families are
provided, each with its log-generator, its modular moments
``m_k = E[Q^k]`` and a sampler for the modular variable ``Q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import MomentDoesNotExistError, ParameterError

__all__ = [
    "DensityGenerator",
    "Gaussian",
    "StudentT",
    "GeneralizedGaussian",
    "Kotz",
    "log_h",
    "modular_moment",
    "sample_Q",
    "modular_pdf",
    "generator_from_dict",
]


def _check_dim(d):
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d}")
    return int(d)


def _as_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ParameterError("generator argument t must be >= 0")
    return t


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


class DensityGenerator:
    """Common interface of the generator families.

    Subclasses implement ``_log_h``, ``_moment_bounds``, ``_log_moment`` and
    ``_draw``. Public methods validate inputs and return plain floats for
    scalar arguments.
    """

    name = "generator"

    def log_h(self, d, t):
        """Log of the density generator ``h_d`` at ``t >= 0``."""
        d = _check_dim(d)
        self._validate(d)
        return _scalar(self._log_h(d, _as_t(t)))

    def moment_bounds(self, d):
        """Open interval ``(low, high)`` of orders ``k`` with finite ``m_k``."""
        d = _check_dim(d)
        self._validate(d)
        return self._moment_bounds(d)

    def moment_exists(self, d, k):
        low, high = self.moment_bounds(d)
        return low < k < high

    def modular_moment(self, d, k):
        """``m_k = E[Q^k]`` for the modular variable of dimension ``d``.

        Raises
        ------
        MomentDoesNotExistError
            If ``k`` is outside the existence interval; the message names
            the violated bound.
        """
        d = _check_dim(d)
        self._validate(d)
        if k == 0:
            return 1.0
        low, high = self._moment_bounds(d)
        if not k > low:
            raise MomentDoesNotExistError(
                f"{self.name} modular moment m_{k} with d={d} requires k > {self._low_text(d)}")
        if not k < high:
            raise MomentDoesNotExistError(
                f"{self.name} modular moment m_{k} with d={d} requires k < {self._high_text(d)}")
        return self._moment(d, k)

    def sample_Q(self, d, rng, size=None):
        """Draw the modular variable ``Q`` (a float, or an array if ``size``)."""
        d = _check_dim(d)
        self._validate(d)
        return self._draw(d, rng, size)

    def modular_pdf(self, d, t):
        """Density of ``Q``: ``pi^{d/2}/Gamma(d/2) h_d(t) t^{d/2-1}`` for ``t > 0``."""
        d = _check_dim(d)
        self._validate(d)
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ParameterError("modular_pdf needs t > 0")
        logc = 0.5 * d * math.log(math.pi) - gammaln(0.5 * d)
        return _scalar(np.exp(logc + self._log_h(d, t) + (0.5 * d - 1.0) * np.log(t)))

    # -- hooks -------------------------------------------------------------
    def _validate(self, d):
        pass

    def _moment(self, d, k):
        return math.exp(self._log_moment(d, k))

    def _low_text(self, d):
        return f"{self._moment_bounds(d)[0]:g}"

    def _high_text(self, d):
        return f"{self._moment_bounds(d)[1]:g}"

    def to_dict(self):
        raise NotImplementedError


def _rising(x, k):
    """``Gamma(x + k) / Gamma(x)`` for integer ``k`` as a finite product."""
    out = 1.0
    if k > 0:
        for j in range(k):
            out *= x + j
    else:
        for j in range(1, -k + 1):
            out /= x - j
    return out


@dataclass(frozen=True)
class Gaussian(DensityGenerator):
    """Gaussian generator ``h_d(t) = (2 pi)^{-d/2} exp(-t/2)``; ``Q ~ chi^2_d``."""

    name = "gaussian"

    def _log_h(self, d, t):
        return -0.5 * d * math.log(2 * math.pi) - 0.5 * t

    def _moment_bounds(self, d):
        return (-0.5 * d, math.inf)

    def _moment(self, d, k):
        if int(k) == k and abs(k) <= 64:
            # integer orders as a product so that e.g. m_1 == d exactly
            return 2.0 ** k * _rising(0.5 * d, int(k))
        return math.exp(self._log_moment(d, k))

    def _log_moment(self, d, k):
        return k * math.log(2.0) + gammaln(0.5 * d + k) - gammaln(0.5 * d)

    def _draw(self, d, rng, size):
        return rng.gamma(0.5 * d, 2.0, size)

    def to_dict(self):
        return {"kind": "gaussian"}


@dataclass(frozen=True)
class StudentT(DensityGenerator):
    """Multivariate t generator with ``nu`` degrees of freedom.

    ``Q`` is ``d`` times an ``F(d, nu)`` variate.
    """

    nu: float
    name = "t"

    def __post_init__(self):
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ParameterError(f"t generator requires nu > 0, got {self.nu}")

    def _log_h(self, d, t):
        nu = self.nu
        return (-0.5 * d * math.log(math.pi * nu) + gammaln(0.5 * (nu + d))
                - gammaln(0.5 * nu) - 0.5 * (nu + d) * np.log1p(t / nu))

    def _moment_bounds(self, d):
        return (-0.5 * d, 0.5 * self.nu)

    def _high_text(self, d):
        return f"nu/2 = {0.5 * self.nu:g}"

    def _moment(self, d, k):
        if int(k) == k and abs(k) <= 64:
            k = int(k)
            return self.nu ** k * _rising(0.5 * d, k) * _rising(0.5 * self.nu, -k)
        return math.exp(self._log_moment(d, k))

    def _log_moment(self, d, k):
        nu = self.nu
        return (k * math.log(nu) + gammaln(0.5 * d + k) - gammaln(0.5 * d)
                + gammaln(0.5 * nu - k) - gammaln(0.5 * nu))

    def _draw(self, d, rng, size):
        num = rng.gamma(0.5 * d, 2.0, size)
        den = rng.gamma(0.5 * self.nu, 2.0, size)
        return num * self.nu / den

    def to_dict(self):
        return {"kind": "t", "nu": self.nu}


@dataclass(frozen=True)
class GeneralizedGaussian(DensityGenerator):
    """Generalized Gaussian generator with shape ``beta``; ``Q^beta ~ Gamma(d/(2 beta), 2)``.

    Normalized so that ``beta = 1`` is the Gaussian generator.
    """

    beta: float
    name = "generalized Gaussian"

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ParameterError(f"generalized Gaussian requires beta > 0, got {self.beta}")

    def _log_h(self, d, t):
        b = self.beta
        return (math.log(b) - 0.5 * d * math.log(math.pi) - d / (2 * b) * math.log(2.0)
                + gammaln(0.5 * d) - gammaln(d / (2 * b)) - 0.5 * np.power(t, b))

    def _moment_bounds(self, d):
        return (-0.5 * d, math.inf)

    def _moment(self, d, k):
        j = k / self.beta
        if j == int(j) and abs(j) <= 64:
            return 2.0 ** j * _rising(d / (2 * self.beta), int(j))
        return math.exp(self._log_moment(d, k))

    def _log_moment(self, d, k):
        b = self.beta
        return (k / b * math.log(2.0) + gammaln((0.5 * d + k) / b)
                - gammaln(d / (2 * b)))

    def _draw(self, d, rng, size):
        return np.power(rng.gamma(d / (2 * self.beta), 2.0, size), 1.0 / self.beta)

    def to_dict(self):
        return {"kind": "generalized_gaussian", "beta": self.beta}


@dataclass(frozen=True)
class Kotz(DensityGenerator):
    """Kotz generator ``h_d(t) ∝ t^{alpha-1} exp(-R t^beta)``.

    ``alpha + d/2 > 1`` is required at every dimension ``d`` it is used with.
    """

    alpha: float
    beta: float
    R: float
    name = "Kotz"

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ParameterError(f"Kotz generator requires beta > 0, got {self.beta}")
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ParameterError(f"Kotz generator requires R > 0, got {self.R}")
        if not math.isfinite(self.alpha):
            raise ParameterError("Kotz generator requires a finite alpha")

    def _validate(self, d):
        if not self.alpha + 0.5 * d > 1:
            raise ParameterError(
                f"Kotz generator requires alpha + d/2 > 1, got alpha={self.alpha}, d={d}")

    def _shape(self, d):
        return (0.5 * d + self.alpha - 1.0) / self.beta

    def _log_h(self, d, t):
        a, b, r = self.alpha, self.beta, self.R
        if a < 1 and np.any(t == 0):
            raise ParameterError("Kotz generator with alpha < 1 is unbounded at t = 0")
        const = (math.log(b) - 0.5 * d * math.log(math.pi) + self._shape(d) * math.log(r)
                 + gammaln(0.5 * d) - gammaln(self._shape(d)))
        with np.errstate(divide="ignore"):
            power = np.where(t > 0, (a - 1.0) * np.log(np.where(t > 0, t, 1.0)),
                             0.0 if a == 1 else -np.inf)
        return const + power - r * np.power(t, b)

    def _moment_bounds(self, d):
        return (-0.5 * d - self.alpha + 1.0, math.inf)

    def _low_text(self, d):
        return f"-d/2 - alpha + 1 = {self._moment_bounds(d)[0]:g}"

    def _moment(self, d, k):
        j = k / self.beta
        if j == int(j) and abs(j) <= 64:
            return self.R ** (-j) * _rising(self._shape(d), int(j))
        return math.exp(self._log_moment(d, k))

    def _log_moment(self, d, k):
        b = self.beta
        return (-k / b * math.log(self.R) + gammaln(self._shape(d) + k / b)
                - gammaln(self._shape(d)))

    def _draw(self, d, rng, size):
        g = rng.gamma(self._shape(d), 1.0, size)
        return np.power(g / self.R, 1.0 / self.beta)

    def to_dict(self):
        return {"kind": "kotz", "alpha": self.alpha, "beta": self.beta, "R": self.R}


# functional spellings -----------------------------------------------------

def log_h(gen: DensityGenerator, d, t):
    return gen.log_h(d, t)


def modular_moment(gen: DensityGenerator, d, k):
    return gen.modular_moment(d, k)


def sample_Q(gen: DensityGenerator, d, rng, size=None):
    return gen.sample_Q(d, rng, size)


def modular_pdf(gen: DensityGenerator, d, t):
    return gen.modular_pdf(d, t)


def generator_from_dict(data) -> DensityGenerator:
    """Inverse of ``to_dict``."""
    kind = data.get("kind")
    if kind == "gaussian":
        return Gaussian()
    if kind == "t":
        return StudentT(float(data["nu"]))
    if kind == "generalized_gaussian":
        return GeneralizedGaussian(float(data["beta"]))
    if kind == "kotz":
        return Kotz(float(data["alpha"]), float(data["beta"]), float(data["R"]))
    raise ParameterError(f"unknown generator kind {kind!r}")
