"""Kronecker moments ``E[⊗^k S]`` of arbitrary order.

Results are returned as ``vec(E[⊗^k S])``, a vector of length ``p^{2k}``
(the ``p^k x p^k`` Kronecker power vectorized column-major).

Wishart moments are evaluated by applying the operators ``M_(j)`` to
``⊗^k vec(I_p)`` and finishing with a mode product by ``Sigma^{1/2}`` on
each of the ``2k`` tensor axes. Inverse Wishart moments follow from a
linear recursion solved by conjugate gradients. Elliptical variants
rescale those by ratios of modular moments.

Every operator is a :class:`~ellwishart.linalg.PermSumOperator`; nothing
larger than the result vector is ever materialized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import _backend
from .distributions import EwParams
from .errors import (ConvergenceError, DimensionError, MemoryBudgetError,
                     MomentDoesNotExistError, ParameterError)
from .generators import _rising
from .linalg import (PermSumOperator, check_spd, commutation_matrix, kron_chain,
                     symmetric_sqrt, unvec, vec)

__all__ = [
    "DEFAULT_MEMORY_BUDGET",
    "KronMomentRequest",
    "kron_memory_estimate",
    "check_memory_budget",
    "build_G",
    "build_H",
    "build_J",
    "build_M",
    "build_A",
    "wishart_kron_moment",
    "ew_kron_moment",
    "inverse_wishart_kron_moment",
    "iew_kron_moment",
    "kron_moment",
    "mc_kron_moment",
    "rearrange_second_moment",
    "kron_moment_matrix",
    "clear_operator_cache",
]

#: Default memory budget in bytes for one Kronecker-moment evaluation.
DEFAULT_MEMORY_BUDGET = 64 * 2 ** 20

_CG_RTOL = 1e-14
_SOLVE_CHECK = 1e-11


def _I(dim):
    return PermSumOperator.identity(dim)


def _K(p, q):
    return commutation_matrix(p, q)


def _shift(p, k):
    """``I_{p^k} ⊗ K_{p, p^k} ⊗ I_p``."""
    return kron_chain(_I(p ** k), _K(p, p ** k), _I(p))


# ---------------------------------------------------------------------------
# memory


def kron_memory_estimate(p, k):
    """Peak bytes needed to evaluate an order-``k`` moment in dimension ``p``.

    Counts the result and work vectors plus the int64 index arrays of the
    largest operator (``2k + 1`` permutation terms of length ``p^{2k}``).
    """
    length = p ** (2 * k)
    return 8 * length * (7 + 2 * (2 * k + 1))


def check_memory_budget(p, k, budget=DEFAULT_MEMORY_BUDGET):
    """Raise :class:`MemoryBudgetError` if an order-``k`` request does not fit."""
    if budget is None:
        return
    length = p ** (2 * k)
    need = kron_memory_estimate(p, k)
    if length >= budget / 8 or need > budget:
        raise MemoryBudgetError(
            f"order-{k} Kronecker moment with p={p} works on vectors of length {length} "
            f"and needs about {need / 2**20:.1f} MiB, over the memory budget of "
            f"{budget / 2**20:.1f} MiB; pass a larger budget "
            "(--memory-budget on the command line) to allow it")


# ---------------------------------------------------------------------------
# operators


def clear_operator_cache():
    """Drop every cached operator (used after changing global index maps)."""
    for fn in (build_G, build_H, build_J, _m_parts, build_A, _shift_cached):
        fn.cache_clear()


@lru_cache(maxsize=None)
def _shift_cached(p, k):
    return _shift(p, k)


@lru_cache(maxsize=None)
def build_G(p):
    """``G = (K ⊗ K)(I_p ⊗ K ⊗ I_p)[K ⊗ (I_{p^2} + K)]`` with ``K = K_{p,p}``.

    Acts on length ``p^4``. Used inside :func:`build_J`.
    """
    kp = _K(p, p)
    left = kp.kron(kp) @ kron_chain(_I(p), kp, _I(p))
    return left @ kp.kron(_I(p * p) + kp)


@lru_cache(maxsize=None)
def build_H(p, k, l):
    """``H_(k,l) = I_{p^l} ⊗ K_{p, p^{k-1-l}} ⊗ I_p`` on length ``p^{k+1}``."""
    if not 0 <= l < k:
        raise ParameterError(f"H_(k,l) needs 0 <= l < k, got k={k}, l={l}")
    return kron_chain(_I(p ** l), _K(p, p ** (k - 1 - l)), _I(p))


@lru_cache(maxsize=None)
def build_J(p, k):
    """``J_(k)`` on length ``p^{2k+2}`` for ``k >= 1``."""
    if k < 1:
        raise ParameterError(f"J_(k) needs k >= 1, got {k}")
    hsum = PermSumOperator.zero(p ** (2 * k + 2))
    for l in range(k):
        h = build_H(p, k, l)
        hsum = hsum + h.kron(h)
    a = kron_chain(_I(p ** (k - 1)), _K(p * p, p ** (k - 1)), _I(p * p))
    g = _I(p ** (2 * k - 2)).kron(build_G(p))
    b = kron_chain(_I(p ** (k - 1)), _K(p ** (k - 1), p * p), _I(p * p))
    return hsum @ a @ g @ b @ _shift_cached(p, k)


@lru_cache(maxsize=None)
def _m_parts(p, k):
    """n-independent pieces ``(shift K_big, J K_big)`` of ``M_(k)``."""
    kbig = _K(p ** (2 * k), p * p)
    return _shift_cached(p, k) @ kbig, build_J(p, k) @ kbig


def build_M(p, k, n, budget=DEFAULT_MEMORY_BUDGET):
    """``M_(k) = [n (I_{p^k} ⊗ K_{p,p^k} ⊗ I_p) + J_(k)] K_{p^{2k}, p^2}``.

    ``M_(0) = n I_{p^2}``. Acts on vectors of length ``p^{2k+2}``.
    """
    if p < 1 or k < 0:
        raise ParameterError(f"M_(k) needs p >= 1 and k >= 0, got p={p}, k={k}")
    check_memory_budget(p, k + 1, budget)
    if k == 0:
        return float(n) * _I(p * p)
    shifted, jk = _m_parts(p, k)
    return float(n) * shifted + jk


def _swap(p, m, a, b):
    """Exchange tensor axes ``a`` and ``b`` of a length ``p^{2m}`` vector.

    Axes follow the C-order reshape ``(p,) * 2m``: ``c_1..c_m`` then
    ``r_1..r_m`` (column indices of the Kronecker factors, then row indices).
    """
    axes = list(range(2 * m))
    axes[a], axes[b] = axes[b], axes[a]
    perm = np.arange(p ** (2 * m), dtype=np.int64).reshape((p,) * (2 * m))
    return PermSumOperator(p ** (2 * m), [(1.0, perm.transpose(axes).ravel())], check=False)


@lru_cache(maxsize=None)
def build_A(p, k, n):
    """Operator of the inverse Wishart recursion at step ``k``.

    ``A(k) = (n-p-1) I - sum_{t<k} [swap(c_t, r_{k+1}) + swap(c_t, c_{k+1})]`` on
    length ``p^{2k+2}``. For ``S ~ W^{-1}(n, Sigma)`` it satisfies::

        A(k) vec E[⊗^{k+1} S] = (I_{p^k} ⊗ K_{p,p^k} ⊗ I_p) vec(E[⊗^k S] ⊗ Sigma)

    and is symmetric positive definite when ``n > p + 2k + 1``.
    """
    if p < 1 or k < 0:
        raise ParameterError(f"A(k) needs p >= 1 and k >= 0, got p={p}, k={k}")
    if not n > p + 2 * k + 1:
        raise MomentDoesNotExistError(
            f"A(k) with k={k} requires n > p + 2k + 1 = {p + 2 * k + 1}, got n={n}")
    m = k + 1
    op = float(n - p - 1) * _I(p ** (2 * m))
    for t in range(k):
        op = op - _swap(p, m, t, m + k) - _swap(p, m, t, k)
    return op


# ---------------------------------------------------------------------------
# evaluation


def _check_order(k, name="k"):
    if int(k) != k or k < 1:
        raise ParameterError(f"Kronecker moment order {name} must be an integer >= 1, got {k}")
    return int(k)


def _mode_product(x, root, naxes):
    p = root.shape[0]
    t = x.reshape((p,) * naxes)
    for a in range(naxes):
        t = np.moveaxis(np.tensordot(root, t, axes=(1, a)), 0, a)
    return np.ascontiguousarray(t).reshape(-1)


def wishart_kron_moment(n, sigma, k, budget=DEFAULT_MEMORY_BUDGET):
    """``vec(E[⊗^k S])`` for ``S ~ W(n, Sigma)``.

    Examples
    --------
    >>> wishart_kron_moment(5, np.eye(1), 2)
    array([35.])
    """
    sigma = check_spd(sigma, name="sigma")
    p = sigma.shape[0]
    k = _check_order(k)
    if n < p:
        raise ParameterError(f"Wishart moments need n >= p, got n={n}, p={p}")
    check_memory_budget(p, k, budget)
    e = vec(np.eye(p))
    x = reduce(np.kron, [e] * k)
    for l in reversed(range(k)):
        x = build_M(p, k - 1 - l, n, budget=None).apply(x, left=p ** (2 * l))
    return _mode_product(x, symmetric_sqrt(sigma), 2 * k)


def _ew_scale(gen, d, k):
    """``m_k Gamma(d/2) / (2^k Gamma(d/2 + k))``."""
    mk = gen.modular_moment(d, k)
    return mk / (2.0 ** k * _rising(0.5 * d, k))


def ew_kron_moment(params: EwParams, k, budget=DEFAULT_MEMORY_BUDGET):
    """``vec(E[⊗^k S])`` for ``S ~ EW(n, Sigma, h)``; needs ``m_k`` finite."""
    if params.inverse:
        raise ParameterError("ew_kron_moment needs inverse=False parameters")
    k = _check_order(k)
    d = params.n * params.p
    if not params.gen.moment_exists(d, k):
        raise MomentDoesNotExistError(
            f"order-{k} EW Kronecker moment needs m_{k} finite: "
            + _why(params.gen, d, k))
    scale = _ew_scale(params.gen, d, k)
    return scale * wishart_kron_moment(params.n, params.sigma, k, budget)


def _why(gen, d, k):
    try:
        gen.modular_moment(d, k)
    except MomentDoesNotExistError as exc:
        return str(exc)
    return ""


def _cg_solve(op, rhs):
    lin = LinearOperator((op.dim, op.dim), matvec=op.apply, dtype=float)
    x, info = cg(lin, rhs, rtol=_CG_RTOL, atol=0.0, maxiter=10 * op.dim)
    resid = np.linalg.norm(op.apply(x) - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if resid > _SOLVE_CHECK:
        raise ConvergenceError(
            f"conjugate gradients stopped with relative residual {resid:.3g} (info={info})",
            last_iterate=x, residual=resid)
    return x


def inverse_wishart_kron_moment(n, sigma, k_plus_1, budget=DEFAULT_MEMORY_BUDGET):
    """``vec(E[⊗^{k+1} S])`` for ``S ~ W^{-1}(n, Sigma)``; needs ``n > p + 2k + 1``."""
    sigma = check_spd(sigma, name="sigma")
    p = sigma.shape[0]
    order = _check_order(k_plus_1, "k+1")
    k = order - 1
    if not n > p + 2 * k + 1:
        raise MomentDoesNotExistError(
            f"order-{order} inverse Wishart Kronecker moment requires "
            f"n > p + 2k + 1 = {p + 2 * k + 1}, got n={n}")
    check_memory_budget(p, order, budget)
    s = vec(sigma)
    z = s / (n - p - 1)
    for j in range(1, order):
        rhs = _shift_cached(p, j).apply(np.kron(z, s))
        z = _cg_solve(build_A(p, j, n), rhs)
    return z


def iew_kron_moment(params: EwParams, k_plus_1, budget=DEFAULT_MEMORY_BUDGET):
    """``vec(E[⊗^{k+1} S])`` for ``S ~ IEW(n, Sigma, h)``.

    Requires ``k + 1 < np/2``, ``n > p + 2k + 1`` and ``m_{-k-1}`` finite.
    """
    if not params.inverse:
        raise ParameterError("iew_kron_moment needs inverse=True parameters")
    order = _check_order(k_plus_1, "k+1")
    n, p = params.n, params.p
    d = n * p
    if not order < d / 2:
        raise MomentDoesNotExistError(
            f"order-{order} IEW Kronecker moment requires k+1 < np/2 = {d / 2:g}")
    if not n > p + 2 * order - 1:
        raise MomentDoesNotExistError(
            f"order-{order} IEW Kronecker moment requires n > p + 2k + 1 = "
            f"{p + 2 * order - 1}, got n={n}")
    if not params.gen.moment_exists(d, -order):
        raise MomentDoesNotExistError(
            f"order-{order} IEW Kronecker moment needs m_{-order} finite: "
            + _why(params.gen, d, -order))
    mk = params.gen.modular_moment(d, -order)
    scale = mk * 2.0 ** order / _rising(0.5 * d, -order)
    return scale * inverse_wishart_kron_moment(n, params.sigma, order, budget)


def kron_moment(params: EwParams, k, budget=DEFAULT_MEMORY_BUDGET):
    """Dispatch on ``params.inverse``; ``k`` is the Kronecker order."""
    if params.inverse:
        return iew_kron_moment(params, k, budget)
    return ew_kron_moment(params, k, budget)


@dataclass(frozen=True, eq=False)
class KronMomentRequest:
    """A Kronecker-moment query: parameters, order and memory budget."""

    params: EwParams
    order: int
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        _check_order(self.order, "order")
        check_memory_budget(self.params.p, self.order, self.memory_budget)

    def compute(self):
        return kron_moment(self.params, self.order, self.memory_budget)


def kron_moment_matrix(v, p, k):
    """Reshape ``vec(E[⊗^k S])`` into the ``p^k x p^k`` matrix."""
    return unvec(np.asarray(v), p ** k, p ** k)


# ---------------------------------------------------------------------------
# Monte Carlo


def _power_indices(p, k):
    """Row/column index of each factor for every entry of ``vec(⊗^k S)``."""
    size = p ** k
    j = np.arange(size * size, dtype=np.int64)
    row, col = j % size, j // size
    shifts = p ** np.arange(k - 1, -1, -1, dtype=np.int64)
    rows = (row[None, :] // shifts[:, None]) % p
    cols = (col[None, :] // shifts[:, None]) % p
    return np.ascontiguousarray(rows), np.ascontiguousarray(cols)


def mc_kron_moment(params: EwParams, k, N, rng, budget=DEFAULT_MEMORY_BUDGET,
                   method="bartlett", batch=None):
    """Monte Carlo estimate of ``vec(E[⊗^k S])`` with per-entry standard errors.

    Parameters
    ----------
    params : EwParams
    k : int
    N : int
        Number of draws, at least 1000.
    rng : numpy.random.Generator
    batch : int, optional
        Draws generated per block; bounded by the memory budget.

    Returns
    -------
    estimate, standard_errors : numpy.ndarray
    """
    from .sampling import sample

    k = _check_order(k)
    if N < 1000:
        raise ParameterError(f"Monte Carlo moments need N >= 1000, got {N}")
    p = params.p
    check_memory_budget(p, k, budget)
    rows, cols = _power_indices(p, k)
    if batch is None:
        batch = 65536
    total = np.zeros(p ** (2 * k))
    total_sq = np.zeros(p ** (2 * k))
    done = 0
    while done < N:
        m = min(batch, N - done)
        draws = np.ascontiguousarray(sample(params, rng, method, size=m))
        s1, s2 = _backend.kron_power_sums(draws, rows, cols)
        total += s1
        total_sq += s2
        done += m
    est = total / N
    var = np.maximum(total_sq / N - est * est, 0.0) * N / (N - 1)
    return est, np.sqrt(var / N)


# ---------------------------------------------------------------------------
# second-moment arrangements


def rearrange_second_moment(mat):
    """Map ``E[vec S vec S^T]`` to ``E[S ⊗ S]`` and back.

    Both are ``p^2 x p^2``; the map is ``vec(out) = (I_p ⊗ K_{p,p} ⊗ I_p) vec(mat)``,
    which is its own inverse.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {mat.shape}")
    p = math.isqrt(mat.shape[0])
    if p * p != mat.shape[0]:
        raise DimensionError(f"side {mat.shape[0]} is not a perfect square")
    op = kron_chain(_I(p), _K(p, p), _I(p))
    return unvec(op.apply(vec(mat)), p * p, p * p)
