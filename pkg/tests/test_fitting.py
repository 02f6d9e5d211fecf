import numpy as np
import pytest
from scipy import stats

from ellwishart.distributions import EwParams
from ellwishart.errors import ConvergenceError, NotPositiveDefiniteError, ParameterError
from ellwishart.fitting import (ALL_STATISTICS, StatisticKind, ecdf, fit_report,
                                kolmogorov_sf, ks_two_sample, mle_t_wishart, mle_wishart,
                                select_nu, statistic, statistics, t_wishart_loglik)
from ellwishart.generators import StudentT
from ellwishart.sampling import sample
from oracles import random_spd


def test_statistics_definitions(rng):
    s = random_spd(rng, 3)
    assert statistic(s, "trace") == pytest.approx(np.trace(s))
    assert statistic(s, "trace3") == pytest.approx(np.trace(s @ s @ s))
    assert statistic(s, "norm2") == pytest.approx(np.linalg.norm(s @ s))
    assert statistic(s, "neglog10det") == pytest.approx(-np.log10(np.linalg.det(s)))
    batch = np.stack([s, 2 * s])
    for kind in ALL_STATISTICS:
        np.testing.assert_allclose(statistics(batch, kind),
                                   [statistic(s, kind), statistic(2 * s, kind)])


def test_ecdf_right_continuous():
    f = ecdf([3.0, 1.0, 2.0, 2.0])
    np.testing.assert_allclose(f([0.5, 1.0, 2.0, 2.5, 3.0]), [0, 0.25, 0.75, 0.75, 1.0])


def test_kolmogorov_sf_matches_scipy():
    for lam in (0.2, 0.5, 0.9, 1.0, 1.3, 2.5):
        assert kolmogorov_sf(lam) == pytest.approx(stats.kstwobign.sf(lam), rel=1e-10, abs=1e-15)


def test_ks_two_sample_matches_scipy(rng):
    x, y = rng.standard_normal(800), rng.standard_normal(600) + 0.1
    got = ks_two_sample(x, y)
    want = stats.ks_2samp(x, y, method="asymp")
    assert got.D == pytest.approx(want.statistic, abs=1e-15)
    lam = np.sqrt(800 * 600 / 1400) * got.D
    assert got.p == pytest.approx(stats.kstwobign.sf(lam), rel=1e-10)


def test_mle_wishart(rng):
    sig = random_spd(rng, 3)
    s = sample(EwParams(20, sig), rng, size=5000)
    np.testing.assert_allclose(mle_wishart(s, 20), s.mean(0) / 20)
    assert np.linalg.norm(mle_wishart(s, 20) - sig) / np.linalg.norm(sig) < 0.02


def test_mle_t_fixed_point_and_likelihood(rng):
    sig = random_spd(rng, 3, cond=5)
    n, nu = 15, 6.0
    s = sample(EwParams(n, sig, StudentT(nu)), rng, size=3000)
    est, info = mle_t_wishart(s, n, nu, tol=1e-10, full_output=True)
    ll = np.array(info["loglik"])
    assert np.all(np.diff(ll) > -1e-7 * np.abs(ll[:-1]))
    # stationarity: perturbing the estimate lowers the likelihood
    best = t_wishart_loglik(s, n, nu, est)
    for scale in (0.99, 1.01):
        assert t_wishart_loglik(s, n, nu, scale * est) < best
    assert np.linalg.norm(est - sig) / np.linalg.norm(sig) < 0.05


def test_mle_t_convergence_error(rng):
    s = sample(EwParams(10, np.eye(2), StudentT(4.0)), rng, size=200)
    with pytest.raises(ConvergenceError) as info:
        mle_t_wishart(s, 10, 4.0, tol=1e-300, max_iter=3)
    assert info.value.last_iterate.shape == (2, 2)


def test_select_nu_prefers_heavy_tails(rng):
    s = sample(EwParams(30, np.eye(2), StudentT(4.0)), rng, size=1500)
    best, scores = select_nu(s, 30, [4.0, 200.0], rng, mc_count=5000)
    assert best == 4.0 and set(scores) == {4.0, 200.0}


def test_fit_report_structure_and_workers(rng):
    data = {"a": sample(EwParams(12, np.eye(2), StudentT(6.0)), rng, size=200),
            "b": sample(EwParams(12, 2 * np.eye(2)), rng, size=150)}
    kinds = [StatisticKind.TRACE, StatisticKind.NEG_LOG10_DET]
    one = fit_report(data, 12, nu=6.0, stats=kinds, mc_count=2000, seed=9, grid_size=64)
    two = fit_report(data, 12, nu=6.0, stats=kinds, mc_count=2000, seed=9, grid_size=64,
                     workers=2)
    assert one.to_json_dict() == two.to_json_dict()
    cf = one.classes["a"]
    assert cf.count == 200 and cf.curves[StatisticKind.TRACE].shape == (64, 4)
    assert 0 <= cf.ks[StatisticKind.TRACE]["t_wishart"].p <= 1
    j = one.to_json_dict()
    assert j["schema_version"] == 1 and set(j["classes"]) == {"a", "b"}


def test_fit_report_default_nu_and_errors(rng):
    s = sample(EwParams(12, np.eye(2)), rng, size=50)
    rep = fit_report({"13": s}, 12, stats=["trace"], mc_count=1000, seed=1, grid_size=0)
    assert rep.classes["13"].nu == 40.0
    with pytest.raises(ParameterError):
        fit_report({"x": s}, 12, stats=["trace"], mc_count=1000, seed=1)
    bad = s.copy()
    bad[3] = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefiniteError, match="sample 3"):
        fit_report({"x": bad}, 12, nu=5.0, stats=["trace"], mc_count=1000, seed=1)
