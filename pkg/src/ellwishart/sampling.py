"""Random matrix generation for the EW, IEW and Normalized Wishart laws.

The default EW sampler draws ``S = Q L V L^T`` where ``Q`` is the modular
variable of the generator, ``L`` the Cholesky factor of ``Sigma`` and ``V``
a Normalized Wishart matrix built from a Bartlett decomposition. A naive
sampler working from the matrix-variate definition is kept as an oracle.

Every sampler takes a ``numpy.random.Generator`` and an optional ``size``;
with ``size=None`` a single ``(p, p)`` matrix is returned, otherwise an
array of shape ``(size, p, p)``.
"""
from __future__ import annotations

import enum

import numpy as np

from .distributions import EwParams
from .errors import DegenerateDistributionError, ParameterError, SingularSampleError
from .linalg import cholesky_lower

__all__ = [
    "SamplerMethod",
    "sample_wishart_identity",
    "sample_ew",
    "sample_iew",
    "sample_nw",
    "sample",
]

#: Draws of the IEW sampler with a larger condition number are redrawn once.
MAX_CONDITION = 1e12


class SamplerMethod(str, enum.Enum):
    BARTLETT = "bartlett"
    NAIVE = "naive"


def _count(size):
    if size is None:
        return 1
    size = int(size)
    if size < 0:
        raise ParameterError("size must be non-negative")
    return size


def _finish(batch, size):
    return batch[0] if size is None else batch


def sample_wishart_identity(n, p, rng, size=None):
    """Bartlett draws of ``W(n, I_p)``.

    ``T`` is lower triangular with ``T_kk = sqrt(Gamma((n-k+1)/2, scale 2))``
    and standard normal entries below the diagonal; the result is ``T T^T``.
    """
    n, p = int(n), int(p)
    if p < 1:
        raise ParameterError("p must be >= 1")
    if n < p:
        raise DegenerateDistributionError(f"W(n, I_p) needs n >= p, got n={n}, p={p}")
    m = _count(size)
    t = np.zeros((m, p, p))
    df = n - np.arange(p)
    t[:, np.arange(p), np.arange(p)] = np.sqrt(rng.gamma(df / 2.0, 2.0, size=(m, p)))
    rows, cols = np.tril_indices(p, -1)
    if rows.size:
        t[:, rows, cols] = rng.standard_normal((m, rows.size))
    return _finish(t @ t.transpose(0, 2, 1), size)


def sample_nw(n, p, rng, size=None):
    """Normalized Wishart draws ``V = R / tr(R)`` with ``R ~ W(n, I_p)``."""
    r = sample_wishart_identity(n, p, rng, size=_count(size))
    v = r / np.trace(r, axis1=1, axis2=2)[:, None, None]
    return _finish(v, size)


def _symmetrize(s):
    return 0.5 * (s + s.transpose(0, 2, 1))


def sample_ew(params: EwParams, rng, method=SamplerMethod.BARTLETT, size=None):
    """Draws of ``EW(n, Sigma, h_{np})``.

    Parameters
    ----------
    params : EwParams
        Must have ``inverse=False``.
    rng : numpy.random.Generator
    method : {"bartlett", "naive"}
        ``bartlett`` costs O(p^2) random numbers per draw, ``naive`` O(np).
    size : int, optional
    """
    if params.inverse:
        raise ParameterError("sample_ew needs inverse=False parameters; use sample_iew")
    method = SamplerMethod(method)
    n, p = params.n, params.p
    m = _count(size)
    chol = cholesky_lower(params.sigma)
    q = np.asarray(params.gen.sample_Q(n * p, rng, size=m), dtype=float)
    if method is SamplerMethod.BARTLETT:
        core = sample_nw(n, p, rng, size=m)
    else:
        z = rng.standard_normal((m, p, n))
        z /= np.sqrt(np.sum(z * z, axis=(1, 2)))[:, None, None]
        core = z @ z.transpose(0, 2, 1)
    s = q[:, None, None] * (chol @ core @ chol.T)
    return _finish(_symmetrize(s), size)


def sample_iew(params: EwParams, rng, method=SamplerMethod.BARTLETT, size=None):
    """Draws of ``IEW(n, Sigma, h_{np})`` as inverses of ``EW(n, Sigma^{-1})`` draws.

    A draw whose condition number exceeds ``MAX_CONDITION`` is redrawn once;
    if the redraw is also ill conditioned, :class:`SingularSampleError` is
    raised.
    """
    if not params.inverse:
        raise ParameterError("sample_iew needs inverse=True parameters; use sample_ew")
    inner = EwParams(params.n, np.linalg.inv(params.sigma), params.gen, inverse=False)
    m = _count(size)
    w = sample_ew(inner, rng, method, size=m)
    cond = np.linalg.cond(w)
    for i in np.flatnonzero(~(cond <= MAX_CONDITION)):
        w[i] = sample_ew(inner, rng, method)
        c = np.linalg.cond(w[i])
        if not c <= MAX_CONDITION:
            raise SingularSampleError(
                f"EW draw {i} has condition number {c:.3g} > {MAX_CONDITION:g} after a redraw")
    return _finish(_symmetrize(np.linalg.inv(w)), size)


def sample(params: EwParams, rng, method=SamplerMethod.BARTLETT, size=None):
    """Dispatch to :func:`sample_ew` or :func:`sample_iew`."""
    if params.inverse:
        return sample_iew(params, rng, method, size)
    return sample_ew(params, rng, method, size)
