"""Acceptance suite: oracle and property checks of the whole package.

Each check returns a :class:`CheckResult`. :func:`run_suite` runs them in
order; ``quick=True`` shrinks the Monte Carlo sizes. The
:func:`commutation_fault` context manager corrupts the commutation index
map so the suite can demonstrate that it detects a broken engine.
"""
from __future__ import annotations

import contextlib
import filecmp
import math
import os
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _oracles as orc
from . import linalg
from .distributions import (EwParams, coefficients, ew_mean, ew_variance, iew_mean,
                            iew_variance, nw_moments, second_moment)
from .errors import MemoryBudgetError, MomentDoesNotExistError
from .fitting import ALL_STATISTICS, StatisticKind, fit_report, ks_two_sample, statistics
from .generators import Gaussian, GeneralizedGaussian, Kotz, StudentT
from .kronecker import (clear_operator_cache, iew_kron_moment, kron_moment_matrix,
                        mc_kron_moment, wishart_kron_moment)
from .linalg import PermSumOperator, commutation_matrix, kron_chain, vec
from .sampling import sample_ew, sample_nw

__all__ = ["CheckResult", "CHECKS", "run_suite", "commutation_fault"]

DEFAULT_SEED = 20240611


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} [{self.number}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


@contextlib.contextmanager
def commutation_fault():
    """Temporarily corrupt the commutation-matrix index map."""
    linalg._CORRUPT_COMMUTATION = True
    clear_operator_cache()
    try:
        yield
    finally:
        linalg._CORRUPT_COMMUTATION = False
        clear_operator_cache()


def _random_spd(rng, p):
    a = rng.standard_normal((p, p))
    return a @ a.T + p * np.eye(p)


def _rel(a, b):
    """Largest deviation relative to the largest reference entry."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = np.max(np.abs(b))
    if scale == 0:
        return float(np.max(np.abs(a)))
    return float(np.max(np.abs(a - b)) / scale)


def _entrywise_rel(a, b):
    """Largest entrywise relative deviation.

    Entries whose reference is exactly zero are compared absolutely and
    count as ``inf`` when they exceed 1e-12.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    nz = b != 0
    worst = float(np.max(np.abs(a[nz] - b[nz]) / np.abs(b[nz]), initial=0.0))
    if np.any(np.abs(a[~nz]) > 1e-12):
        return math.inf
    return worst


def _second_moment_mc(samples):
    """Mean and standard error of ``vec S vec S^T`` over draws."""
    v = samples.transpose(0, 2, 1).reshape(samples.shape[0], -1)
    outer = np.einsum("ki,kj->kij", v, v)
    mean = outer.mean(axis=0)
    se = outer.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])
    return mean, se


def _max_z(est, ref, se):
    se = np.asarray(se)
    diff = np.abs(np.asarray(est) - np.asarray(ref))
    z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))
    return float(np.max(z))


# ---------------------------------------------------------------------------
# checks; each returns (passed, detail)


def check_operator_equivalence(rng, quick):
    """Lazy operators agree with dense materializations and K transposes."""
    worst = 0.0
    for p in range(1, 5):
        for q in range(1, 5):
            a = rng.standard_normal((p, q))
            got = commutation_matrix(p, q).apply(vec(a))
            if not np.array_equal(got, vec(a.T)):
                return False, f"K_({p},{q}) vec(A) != vec(A^T)"
    for p in (2, 3):
        kp = commutation_matrix(p, p)
        ops = [kp, kron_chain(PermSumOperator.identity(p), kp, PermSumOperator.identity(p)),
               kp.kron(PermSumOperator.identity(p * p) + kp)]
        for op in ops:
            dense = op.to_dense()
            basis = np.eye(op.dim)
            lazy = np.column_stack([op.apply(basis[:, i]) for i in range(op.dim)])
            worst = max(worst, float(np.max(np.abs(lazy - dense))))
    sig = _random_spd(rng, 2)
    wick2 = orc.wishart_kron2(5, sig)
    err = _rel(kron_moment_matrix(wishart_kron_moment(5, sig, 2), 2, 2), wick2)
    ok = worst == 0.0 and err < 1e-12
    return ok, f"lazy-vs-dense max diff {worst:.1e}, order-2 engine rel err {err:.1e}"


def check_closed_form_specializations(rng, quick):
    worst = 0.0
    for n, p in ((10, 2), (20, 4)):
        for _ in range(5):
            sig = _random_spd(rng, p)
            fwd = EwParams(n, sig, Gaussian())
            inv = EwParams(n, sig, Gaussian(), inverse=True)
            worst = max(worst,
                        _rel(ew_mean(fwd), orc.wishart_mean(n, sig)),
                        _rel(ew_variance(fwd), orc.wishart_variance(n, sig)),
                        _rel(iew_mean(inv), orc.inverse_wishart_mean(n, sig)),
                        _rel(iew_variance(inv), orc.inverse_wishart_variance(n, sig)))
    return worst <= 1e-12, f"max rel err {worst:.2e} (tol 1e-12)"


def check_order2(rng, quick):
    worst = 0.0
    for p in (2, 3):
        for n in (5, 20):
            sig = _random_spd(rng, p)
            got = wishart_kron_moment(n, sig, 2)
            worst = max(worst, _entrywise_rel(got, vec(orc.wishart_kron2(n, sig))))
    return worst <= 1e-10, f"max entrywise rel err {worst:.2e} (tol 1e-10)"


def check_order3(rng, quick):
    n, p = 6, 2
    sig = _random_spd(rng, p)
    exact = wishart_kron_moment(n, sig, 3)
    dense_err = _entrywise_rel(exact, vec(orc.wishart_kron3(n, sig)))
    count = 200_000 if quick else 1_000_000
    est, se = mc_kron_moment(EwParams(n, sig), 3, count, rng)
    z = _max_z(est, exact, se)
    ok = dense_err <= 1e-10 and z < 4
    return ok, f"dense rel err {dense_err:.2e} (tol 1e-10); MC N={count} max|z|={z:.2f} (tol 4)"


def check_univariate(rng, quick):
    worst = 0.0
    for n in (1, 3, 8, 25):
        scale = float(rng.uniform(0.5, 2.0))
        for k in range(1, 7):
            got = wishart_kron_moment(n, np.array([[scale]]), k)[0]
            worst = max(worst, abs(got / (scale ** k * orc.chi2_moment(n, k)) - 1))
    return worst <= 1e-12, f"max rel err {worst:.2e} (tol 1e-12)"


def check_inverse_kron(rng, quick):
    worst1 = 0.0
    for n, p in ((10, 2), (12, 3), (9, 1)):
        sig = _random_spd(rng, p)
        got = iew_kron_moment(EwParams(n, sig, inverse=True), 1)
        worst1 = max(worst1, _rel(got, vec(orc.inverse_wishart_mean(n, sig))))
    n, p = 10, 2
    sig = _random_spd(rng, p)
    v = vec(orc.inverse_wishart_mean(n, sig))
    second = orc.inverse_wishart_variance(n, sig) + np.outer(v, v)
    target = orc.rearrange(second)
    got = kron_moment_matrix(iew_kron_moment(EwParams(n, sig, inverse=True), 2), p, 2)
    worst2 = _rel(got, target)
    ok = worst1 <= 1e-10 and worst2 <= 1e-10
    return ok, f"order 1 rel err {worst1:.2e}, order 2 rel err {worst2:.2e} (tol 1e-10)"


def check_sampler(rng, quick):
    n, p, nu = 20, 3, 10.0
    sig = _random_spd(rng, p)
    params = EwParams(n, sig, StudentT(nu))
    count = 30_000 if quick else 100_000
    draws = sample_ew(params, rng, size=count)
    mean_err = np.linalg.norm(draws.mean(axis=0) - ew_mean(params)) / np.linalg.norm(ew_mean(params))
    m2, se = _second_moment_mc(draws)
    z = _max_z(m2, second_moment(params), se)
    k = 10_000
    bart = sample_ew(params, rng, "bartlett", size=k)
    naive = sample_ew(params, rng, "naive", size=k)
    p_tr = ks_two_sample(statistics(bart, "trace"), statistics(naive, "trace")).p
    p_ld = ks_two_sample(statistics(bart, "neglog10det"), statistics(naive, "neglog10det")).p
    ok = mean_err < 0.01 and z < 4 and p_tr > 0.01 and p_ld > 0.01
    return ok, (f"mean rel err {mean_err:.4f} (tol 0.01); second moment max|z|={z:.2f} (tol 4); "
                f"bartlett-vs-naive KS p trace={p_tr:.3f}, logdet={p_ld:.3f} (need > 0.01)")


def check_normalized_wishart(rng, quick):
    n, p = 20, 4
    count = 30_000 if quick else 100_000
    v = sample_nw(n, p, rng, size=count)
    tr_err = float(np.max(np.abs(np.trace(v, axis1=1, axis2=2) - 1.0)))
    mean_ref, second_ref = nw_moments(n, p)
    se_mean = v.std(axis=0, ddof=1) / math.sqrt(count)
    z1 = _max_z(v.mean(axis=0), mean_ref, se_mean)
    m2, se = _second_moment_mc(v)
    z2 = _max_z(m2, second_ref, se)
    tr_ok = tr_err <= 4 * np.finfo(float).eps
    ok = tr_ok and z1 < 3 and z2 < 4
    return ok, (f"max |tr-1|={tr_err:.1e}; mean max|z|={z1:.2f} (tol 3); "
                f"second moment max|z|={z2:.2f} (tol 4)")


def check_coefficients(rng, quick):
    problems = []
    for n, p in ((10, 2), (20, 4), (9, 3), (30, 5)):
        m = n - p
        exact = {"a": Fraction(n), "b": Fraction(1), "c": Fraction(0),
                 "d": Fraction(1, m - 1), "e": Fraction(1, m * (m - 1) * (m - 3)),
                 "f": Fraction(2, m * (m - 1) ** 2 * (m - 2) * (m - 3))}
        got = coefficients(Gaussian(), n, p)
        for name, value in exact.items():
            if getattr(got, name) != float(value):
                problems.append(f"gaussian {name} at ({n},{p})")
    t = coefficients(StudentT(6), 10, 2)
    for name, value in (("a", 15.0), ("b", 4.5), ("c", 2.25), ("d", 1 / 7)):
        if abs(getattr(t, name) - value) > 1e-12 * abs(value):
            problems.append(f"t {name}={getattr(t, name)}")
    worst = 0.0
    for n, p in ((10, 2), (20, 4), (30, 5)):
        ref = coefficients(Gaussian(), n, p)
        for gen in (Kotz(1.0, 1.0, 0.5), GeneralizedGaussian(1.0)):
            got = coefficients(gen, n, p)
            refs = [getattr(ref, name) for name in "abcdef"]
            worst = max(worst, _entrywise_rel([getattr(got, name) for name in "abcdef"], refs))
    if worst > 1e-12:
        problems.append(f"Kotz/GG vs Gaussian rel err {worst:.2e}")
    detail = "; ".join(problems) if problems else f"Kotz/GG vs Gaussian max rel err {worst:.1e}"
    return not problems, detail


def _t_data(rng, nu, n, p, count):
    sig = _random_spd(rng, p) / n
    return sample_ew(EwParams(n, sig, StudentT(nu)), rng, size=count)


def check_fitting(rng, quick):
    n, p = 100, 4
    k_self = 2000 if not quick else 1000
    mc = 10_000 if not quick else 5000
    seed = int(rng.integers(2 ** 31))
    data = _t_data(rng, 20.0, n, p, k_self)
    rep = fit_report({"self": data}, n, nu=20.0, mc_count=mc, seed=seed, grid_size=0)
    pvals = [rep.classes["self"].ks[s]["t_wishart"].p for s in ALL_STATISTICS]
    passed_stats = sum(pv > 0.01 for pv in pvals)
    k_cross = 10_000 if not quick else 5000
    heavy = _t_data(rng, 5.0, n, p, k_cross)
    cross = fit_report({"heavy": heavy}, n, nu=5.0, stats=[StatisticKind.TRACE],
                       mc_count=k_cross, seed=seed + 1, grid_size=0)
    p_cross = cross.classes["heavy"].ks[StatisticKind.TRACE]["wishart"].p
    p_tw = cross.classes["heavy"].ks[StatisticKind.TRACE]["t_wishart"].p
    ok = passed_stats >= 6 and p_cross < 0.01
    return ok, (f"self-fit p>0.01 on {passed_stats}/7 statistics (need 6); "
                f"cross-fit Wishart trace p={p_cross:.2e} (need < 0.01), t-Wishart p={p_tw:.3f}")


def check_guards(rng, quick):
    msgs = []
    try:
        StudentT(4).modular_moment(8, 2)
        return False, "T(4) accepted m_2"
    except MomentDoesNotExistError as exc:
        msgs.append(str(exc))
    try:
        iew_mean(EwParams(3, np.eye(2), inverse=True))
        return False, "iew_mean accepted n = p + 1"
    except MomentDoesNotExistError as exc:
        msgs.append(str(exc))
    try:
        wishart_kron_moment(10, np.eye(3), 6)
        return False, "memory guard accepted p=3, k=6"
    except MemoryBudgetError as exc:
        msgs.append(str(exc))
    keys = ("nu/2", "n > p + 1", "budget")
    ok = all(key in msg for key, msg in zip(keys, msgs))
    return ok, " | ".join(msgs)


def check_determinism(rng, quick):
    from .cli import main
    seed = str(int(rng.integers(2 ** 31)))
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for run in range(2):
            out = os.path.join(tmp, f"s{run}.csv")
            code = main(["sample", "--dist", "t-wishart", "--nu", "7", "--n", "12", "--p", "3",
                         "--count", "300", "--seed", seed, "--out", out, "--quiet"])
            if code != 0:
                return False, f"sample exited {code}"
            outs.append(out)
        same_sample = filecmp.cmp(outs[0], outs[1], shallow=False)
        # fit the sample file just written, as one class
        dirs = []
        for run in range(2):
            d = os.path.join(tmp, f"fit{run}")
            code = main(["fit", "--data", outs[0], "--dim", "3", "--n", "12", "--nu", "7",
                         "--mc-samples", "2000", "--seed", seed, "--out-dir", d, "--quiet"])
            if code != 0:
                return False, f"fit exited {code}"
            dirs.append(d)
        names = sorted(os.listdir(dirs[0]))
        same_fit = names == sorted(os.listdir(dirs[1])) and all(
            filecmp.cmp(os.path.join(dirs[0], f), os.path.join(dirs[1], f), shallow=False)
            for f in names)
    return same_sample and same_fit, (f"sample files identical={same_sample}; "
                                      f"fit outputs identical={same_fit} ({len(names)} files)")


CHECKS = [
    (0, "operator equivalence", check_operator_equivalence),
    (1, "closed-form specializations", check_closed_form_specializations),
    (2, "Kronecker engine vs order-2 closed form", check_order2),
    (3, "Kronecker engine vs order-3 closed form and Monte Carlo", check_order3),
    (4, "univariate reduction", check_univariate),
    (5, "inverse Kronecker moments", check_inverse_kron),
    (6, "sampler correctness", check_sampler),
    (7, "normalized Wishart", check_normalized_wishart),
    (8, "generator coefficient tables", check_coefficients),
    (9, "fitting power and calibration", check_fitting),
    (10, "moment-existence guards", check_guards),
    (11, "determinism", check_determinism),
]


def run_check(number, seed=DEFAULT_SEED, quick=False):
    for num, name, fn in CHECKS:
        if num == number:
            rng = np.random.default_rng([seed, num])
            start = time.perf_counter()
            try:
                ok, detail = fn(rng, quick)
            except Exception as exc:  # a crash is a failure, reported in place
                ok, detail = False, f"raised {type(exc).__name__}: {exc}"
            return CheckResult(num, name, bool(ok), detail, time.perf_counter() - start)
    raise KeyError(number)


def run_suite(seed=DEFAULT_SEED, quick=False, only=None, echo=None):
    """Run the checks (all, or the numbers in ``only``); return the results."""
    results = []
    for num, _, _ in CHECKS:
        if only is not None and num not in only:
            continue
        res = run_check(num, seed, quick)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
