"""Goodness-of-fit machinery for covariance data.

Scalar statistics of SPD matrices, empirical CDFs, the two-sample
Kolmogorov-Smirnov test, maximum-likelihood centers for the Wishart and
t-Wishart models, and :func:`fit_report`, which ties them together by
comparing data statistics against samples drawn from the fitted models.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import _backend
from .distributions import EwParams, log_multivariate_gamma
from .errors import ConvergenceError, DimensionError, ParameterError
from .generators import Gaussian, StudentT
from .linalg import check_spd
from .sampling import sample_ew

__all__ = [
    "StatisticKind",
    "statistic",
    "statistics",
    "EcdfCurve",
    "ecdf",
    "KsResult",
    "kolmogorov_sf",
    "ks_two_sample",
    "mle_wishart",
    "mle_t_wishart",
    "t_wishart_loglik",
    "select_nu",
    "DEFAULT_NU",
    "FitReport",
    "fit_report",
]


class StatisticKind(str, enum.Enum):
    TRACE = "trace"
    TRACE_POW2 = "trace2"
    TRACE_POW3 = "trace3"
    FROB_NORM = "norm"
    FROB_NORM_POW2 = "norm2"
    FROB_NORM_POW3 = "norm3"
    NEG_LOG10_DET = "neglog10det"


ALL_STATISTICS = tuple(StatisticKind)


def _batch(s):
    s = np.asarray(s, dtype=float)
    if s.ndim == 2:
        s = s[None]
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise DimensionError(f"expected (K, p, p) matrices, got shape {s.shape}")
    return s


def statistics(samples, kind) -> np.ndarray:
    """Vectorized :func:`statistic` over a stack of matrices ``(K, p, p)``."""
    kind = StatisticKind(kind)
    s = _batch(samples)
    if kind is StatisticKind.TRACE:
        return np.trace(s, axis1=1, axis2=2)
    if kind is StatisticKind.NEG_LOG10_DET:
        chol = np.linalg.cholesky(s)
        logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
        return -logdet / math.log(10.0)
    if kind in (StatisticKind.TRACE_POW2, StatisticKind.FROB_NORM_POW2):
        power = s @ s
    elif kind in (StatisticKind.TRACE_POW3, StatisticKind.FROB_NORM_POW3):
        power = s @ s @ s
    else:
        power = s
    if kind in (StatisticKind.TRACE_POW2, StatisticKind.TRACE_POW3):
        return np.trace(power, axis1=1, axis2=2)
    return np.sqrt(np.sum(power * power, axis=(1, 2)))


def statistic(s, kind) -> float:
    """Scalar summary of one SPD matrix.

    ``trace``, ``trace2``, ``trace3`` are ``tr(S^r)``; ``norm``, ``norm2``,
    ``norm3`` are Frobenius norms of ``S^r``; ``neglog10det`` is
    ``-log10 |S|`` from the Cholesky factor.

    Examples
    --------
    >>> statistic(np.diag([2.0, 3.0]), "trace2")
    13.0
    """
    return float(statistics(s, kind)[0])


# ---------------------------------------------------------------------------
# empirical CDFs and KS


@dataclass(frozen=True, eq=False)
class EcdfCurve:
    """Right-continuous step function ``F(x) = #{v <= x} / N``.

    ``x`` holds the distinct sorted sample values and ``F`` the CDF at them.
    """

    x: np.ndarray
    F: np.ndarray
    n: int

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.x, t, side="right")
        out = np.where(idx > 0, self.F[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out


def ecdf(values) -> EcdfCurve:
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ParameterError("ecdf needs at least one value")
    if np.any(np.isnan(v)):
        raise ParameterError("ecdf values contain NaN")
    x, counts = np.unique(v, return_counts=True)
    f = np.cumsum(counts) / v.size
    f[-1] = 1.0
    return EcdfCurve(x, f, int(v.size))


class KsResult(NamedTuple):
    D: float
    p: float


def kolmogorov_sf(lam):
    """``P(K > lam)`` for the Kolmogorov distribution.

    Alternating series ``2 sum (-1)^{j-1} exp(-2 j^2 lam^2)`` for ``lam >= 1``;
    below that the equivalent theta-function form converges far faster.
    Terms are summed until they drop under 1e-12.
    """
    lam = float(lam)
    if lam <= 0:
        return 1.0
    if lam >= 1.0:
        total, j = 0.0, 1
        while True:
            term = math.exp(-2.0 * j * j * lam * lam)
            total += term if j % 2 else -term
            if term < 1e-12:
                break
            j += 1
        sf = 2.0 * total
    else:
        total, j = 0.0, 1
        c = math.pi ** 2 / (8.0 * lam * lam)
        while True:
            term = math.exp(-(2 * j - 1) ** 2 * c)
            total += term
            if term < 1e-12 * max(total, 1e-300) or j > 1000:
                break
            j += 1
        sf = 1.0 - math.sqrt(2.0 * math.pi) / lam * total
    return min(1.0, max(0.0, sf))


def ks_two_sample(xs, ys) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    ``D = sup |F_xs - F_ys|`` over the pooled sample; the p-value uses the
    effective size ``n m / (n + m)``. Recommended for at least 50 values
    per side.
    """
    a = np.sort(np.asarray(xs, dtype=float).ravel())
    b = np.sort(np.asarray(ys, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ParameterError("ks_two_sample needs two nonempty samples")
    d = float(_backend.ks_sup_distance(a, b))
    ne = a.size * b.size / (a.size + b.size)
    return KsResult(d, kolmogorov_sf(math.sqrt(ne) * d))


# ---------------------------------------------------------------------------
# maximum likelihood


def _stack(samples):
    s = np.asarray(samples, dtype=float)
    if s.ndim == 2:
        s = s[None]
    if s.ndim != 3 or s.shape[0] == 0:
        raise ParameterError("need a nonempty stack of matrices")
    if s.shape[1] != s.shape[2]:
        raise DimensionError(f"matrices must be square, got shape {s.shape[1:]}")
    return s


def mle_wishart(samples, n):
    """Wishart MLE of the center: ``sum_i S_i / (n K)``."""
    s = _stack(samples)
    return s.sum(axis=0) / (n * s.shape[0])


def _traces_inv(sigma, s):
    # tr(Sigma^{-1} S) = <L^{-1}, L^{-1} S> with Sigma = L L^T
    linv = np.linalg.inv(np.linalg.cholesky(sigma))
    return np.einsum("ij,kjl,il->k", linv, s, linv)


def t_wishart_loglik(samples, n, nu, sigma):
    """Sum over samples of the t-Wishart log-density with center ``sigma``."""
    s = _stack(samples)
    k, p = s.shape[0], s.shape[1]
    d = n * p
    t = _traces_inv(sigma, s)
    _, logdet_s = np.linalg.slogdet(s)
    _, logdet_sigma = np.linalg.slogdet(sigma)
    gen = StudentT(nu)
    const = 0.5 * d * math.log(math.pi) - log_multivariate_gamma(0.5 * n, p)
    return float(k * (const - 0.5 * n * logdet_sigma)
                 + 0.5 * (n - p - 1) * np.sum(logdet_s) + np.sum(gen.log_h(d, t)))


def mle_t_wishart(samples, n, nu, tol=1e-8, max_iter=1000, full_output=False):
    """t-Wishart MLE of the center by fixed-point iteration.

    ``Sigma <- sum_i w_i S_i / (n sum_i w_i)`` with
    ``w_i = (nu + np) / (nu + tr(Sigma^{-1} S_i))``, started from the Wishart
    MLE and stopped once the relative Frobenius change falls under ``tol``.

    Dividing by ``sum_i w_i`` rather than ``K`` leaves the fixed point
    unchanged (the trace of the stationarity equation forces the mean weight
    to 1) but removes the slow scale drift of the plain EM step when ``np``
    is large compared with ``nu``.

    Parameters
    ----------
    samples : array_like, shape (K, p, p)
    n : int
    nu : float
    tol : float
    max_iter : int
    full_output : bool
        Also return a dict with ``n_iter``, ``residual`` and the
        log-likelihood trace ``loglik``.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations without meeting ``tol``.
    """
    s = _stack(samples)
    if not nu > 0:
        raise ParameterError(f"nu must be > 0, got {nu}")
    if not tol > 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    d = n * s.shape[1]
    sigma = mle_wishart(s, n)
    trace = [t_wishart_loglik(s, n, nu, sigma)] if full_output else None
    resid = math.inf
    for it in range(1, max_iter + 1):
        w = (nu + d) / (nu + _traces_inv(sigma, s))
        new = np.einsum("k,kij->ij", w, s) / (n * w.sum())
        new = 0.5 * (new + new.T)
        resid = np.linalg.norm(new - sigma) / np.linalg.norm(sigma)
        sigma = new
        if full_output:
            trace.append(t_wishart_loglik(s, n, nu, sigma))
        if resid < tol:
            if full_output:
                return sigma, {"n_iter": it, "residual": float(resid), "loglik": trace}
            return sigma
    raise ConvergenceError(
        f"t-Wishart MLE did not converge in {max_iter} iterations "
        f"(relative change {resid:.3g} > tol {tol:g})", last_iterate=sigma, residual=resid)


# ---------------------------------------------------------------------------
# reports

#: Degrees of freedom per class used when none is given (SSVEP classes).
DEFAULT_NU = {"13": 40.0, "17": 35.0, "21": 50.0, "resting": 23.0, "rest": 23.0}


def _model_stats(params, count, rng, kinds, method):
    draws = sample_ew(params, rng, method, size=count)
    return {kind: statistics(draws, kind) for kind in kinds}


def select_nu(samples, n, nus, rng, mc_count=10_000, method="bartlett"):
    """Heuristic choice of ``nu``: best trace-statistic KS p-value over ``nus``.

    Returns ``(best_nu, {nu: p_value})``.
    """
    s = _stack(samples)
    data = statistics(s, StatisticKind.TRACE)
    scores = {}
    for nu in nus:
        center = mle_t_wishart(s, n, nu)
        params = EwParams(n, center, StudentT(nu))
        model = _model_stats(params, mc_count, rng, [StatisticKind.TRACE], method)
        scores[float(nu)] = ks_two_sample(data, model[StatisticKind.TRACE]).p
    best = max(scores, key=lambda v: (scores[v], -v))
    return best, scores


@dataclass
class ClassFit:
    label: str
    count: int
    nu: float
    centers: dict
    ks: dict
    curves: dict = field(default_factory=dict, repr=False)


@dataclass
class FitReport:
    """Per-class KS results, estimated centers and CDF curves.

    ``classes[label].ks[stat][model]`` is a :class:`KsResult`; models are
    ``"wishart"`` and ``"t_wishart"``.
    """

    n: int
    seed: Optional[int]
    mc_count: int
    stats: list
    classes: dict

    def to_json_dict(self):
        from . import __version__
        out = {"schema_version": 1, "n": self.n, "seed": self.seed,
               "mc_samples": self.mc_count, "stats": [StatisticKind(s).value for s in self.stats],
               "versions": {"ellwishart": __version__, "numpy": np.__version__},
               "classes": {}}
        for label, cf in self.classes.items():
            out["classes"][label] = {
                "count": cf.count,
                "nu": cf.nu,
                "centers": {m: c.tolist() for m, c in cf.centers.items()},
                "ks": {StatisticKind(st).value: {m: {"D": r.D, "p": r.p} for m, r in per.items()}
                       for st, per in cf.ks.items()},
            }
        return out


def _class_nu(label, nu):
    if isinstance(nu, Mapping):
        if label in nu:
            return float(nu[label])
        if label in DEFAULT_NU:
            return DEFAULT_NU[label]
        raise ParameterError(f"no nu given for class {label!r}")
    if nu is None:
        if label in DEFAULT_NU:
            return DEFAULT_NU[label]
        raise ParameterError(f"no nu given for class {label!r} and no default exists")
    return float(nu)


def _fit_one(label, data, n, nu, kinds, mc_count, seed_seq, grid_size, method, tol, max_iter):
    if data.shape[0] == 0:
        raise ParameterError(f"class {label!r} has no samples")
    rng_w, rng_t = (np.random.default_rng(s) for s in seed_seq.spawn(2))
    center_w = mle_wishart(data, n)
    center_t = mle_t_wishart(data, n, nu, tol=tol, max_iter=max_iter)
    model_w = _model_stats(EwParams(n, center_w, Gaussian()), mc_count, rng_w, kinds, method)
    model_t = _model_stats(EwParams(n, center_t, StudentT(nu)), mc_count, rng_t, kinds, method)
    ks, curves = {}, {}
    for kind in kinds:
        d = statistics(data, kind)
        ks[kind] = {"wishart": ks_two_sample(d, model_w[kind]),
                    "t_wishart": ks_two_sample(d, model_t[kind])}
        if grid_size:
            lo = min(d.min(), model_w[kind].min(), model_t[kind].min())
            hi = max(d.max(), model_w[kind].max(), model_t[kind].max())
            grid = np.linspace(lo, hi, grid_size)
            curves[kind] = np.column_stack([
                grid, ecdf(d)(grid), ecdf(model_w[kind])(grid), ecdf(model_t[kind])(grid)])
    return ClassFit(label, int(data.shape[0]), nu,
                    {"wishart": center_w, "t_wishart": center_t}, ks, curves)


def fit_report(dataset: Mapping, n, nu=None, stats: Sequence = ALL_STATISTICS,
               mc_count=100_000, seed=None, grid_size=512, method="bartlett",
               workers=1, tol=1e-8, max_iter=1000) -> FitReport:
    """Compare labeled covariance sets against fitted Wishart and t-Wishart models.

    Parameters
    ----------
    dataset : mapping of label -> array (K, p, p)
    n : int
        Degrees of freedom (number of time samples behind each covariance).
    nu : float, mapping or None
        t-Wishart degrees of freedom, globally or per class. Classes named
        ``13``, ``17``, ``21`` and ``resting`` fall back to ``DEFAULT_NU``.
    stats : sequence of StatisticKind
    mc_count : int
        Model samples per class and model.
    seed : int, optional
        Master seed. Each class gets its own child stream, so results do not
        depend on ``workers``.
    grid_size : int
        Points of the CDF curves (0 disables them).
    workers : int
        Threads used to process classes concurrently.
    """
    kinds = [StatisticKind(s) for s in stats]
    labels = list(dataset)
    if not labels:
        raise ParameterError("dataset has no classes")
    root = np.random.SeedSequence(seed)
    seed = int(root.entropy)  # record the drawn entropy when no seed was given
    children = root.spawn(len(labels))
    jobs = []
    for label, child in zip(labels, children):
        data = _stack_or_empty(dataset[label])
        for i in range(data.shape[0]):
            check_spd(data[i], sym_rtol=1e-8, name=f"class {label!r} sample {i}")
        jobs.append((label, data, n, _class_nu(label, nu), kinds, mc_count, child,
                     grid_size, method, tol, max_iter))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(lambda job: _fit_one(*job), jobs))
    else:
        fits = [_fit_one(*job) for job in jobs]
    return FitReport(n=int(n), seed=seed, mc_count=int(mc_count), stats=kinds,
                     classes={f.label: f for f in fits})


def _stack_or_empty(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return x.reshape(0, 0, 0)
    return _stack(x)
