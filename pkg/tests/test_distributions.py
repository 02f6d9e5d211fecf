from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from ellwishart.distributions import (EwParams, coefficients, ew_log_pdf, iew_log_pdf,
                                      iew_mean, log_multivariate_gamma, mean,
                                      nw_inverse_moments, second_moment, variance)
from ellwishart.errors import (DegenerateDistributionError, MomentDoesNotExistError,
                               NotPositiveDefiniteError)
from ellwishart.generators import Gaussian, GeneralizedGaussian, Kotz, StudentT
from ellwishart.linalg import commutation_matrix, vec
from oracles import random_spd


def test_log_multivariate_gamma():
    from scipy.special import multigammaln
    for a, p in [(2.5, 1), (3.0, 2), (10.7, 4)]:
        assert log_multivariate_gamma(a, p) == pytest.approx(multigammaln(a, p), rel=1e-13)


def test_gaussian_densities_match_scipy(rng):
    sig = random_spd(rng, 3)
    s = stats.wishart(df=9, scale=sig).rvs(random_state=1)
    assert ew_log_pdf(EwParams(9, sig), s) == pytest.approx(
        stats.wishart(df=9, scale=sig).logpdf(s), rel=1e-12)
    si = random_spd(rng, 3)
    assert iew_log_pdf(EwParams(9, si, inverse=True), s) == pytest.approx(
        stats.invwishart(df=9, scale=si).logpdf(s), rel=1e-12)


def test_t_density_univariate_is_scaled_f():
    # p = 1: S / (n sigma) ~ F(n, nu)
    n, nu, sigma = 7, 5.0, 2.3
    params = EwParams(n, np.array([[sigma]]), StudentT(nu))
    for s in (0.4, 3.0, 40.0):
        want = stats.f(n, nu).logpdf(s / (n * sigma)) - np.log(n * sigma)
        assert ew_log_pdf(params, np.array([[s]])) == pytest.approx(want, rel=1e-12)


def test_density_rejects_bad_input(rng):
    with pytest.raises(NotPositiveDefiniteError):
        ew_log_pdf(EwParams(5, np.eye(2)), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(DegenerateDistributionError):
        EwParams(1, np.eye(2))


def test_gaussian_sextet_is_exact():
    n, p = 10, 2
    c = coefficients(Gaussian(), n, p)
    m = n - p
    want = [n, 1, 0, Fraction(1, m - 1), Fraction(1, m * (m - 1) * (m - 3)),
            Fraction(2, m * (m - 1) ** 2 * (m - 2) * (m - 3))]
    for name, w in zip("abcdef", want):
        assert Fraction(getattr(c, name)) == Fraction(float(w))


def test_t_coefficients():
    c = coefficients(StudentT(6), 10, 2)
    assert (c.a, c.b, c.c) == (15.0, 4.5, 2.25)
    assert c.d == pytest.approx(1 / 7, rel=1e-15)


def test_t_closed_form_agrees_with_modular_moments():
    from ellwishart.distributions import _generic
    for nu, n, p in [(9.0, 10, 2), (5.5, 14, 3)]:
        closed = coefficients(StudentT(nu), n, p)
        generic = _generic(StudentT(nu), n, p, {})
        for name, val in generic.items():
            assert getattr(closed, name) == pytest.approx(val, rel=1e-12)


@pytest.mark.parametrize("gen", [Kotz(1.0, 1.0, 0.5), GeneralizedGaussian(1.0)], ids=repr)
def test_gaussian_equivalents(gen):
    ref = coefficients(Gaussian(), 12, 3)
    got = coefficients(gen, 12, 3)
    for name in "abdef":
        assert getattr(got, name) == pytest.approx(getattr(ref, name), rel=1e-12)
    assert abs(got.c) < 1e-12


def test_missing_coefficients_carry_reasons():
    c = coefficients(StudentT(3), 10, 2)
    assert c.b is None and c.c is None and c.a is not None
    assert "nu>4" in c.missing["b"]
    with pytest.raises(MomentDoesNotExistError, match="nu>4"):
        variance(EwParams(10, np.eye(2), StudentT(3)))
    with pytest.raises(MomentDoesNotExistError, match=r"n > p \+ 1"):
        iew_mean(EwParams(3, np.eye(2), inverse=True))


def test_wishart_moments(rng):
    sig = random_spd(rng, 3)
    params = EwParams(8, sig)
    np.testing.assert_allclose(mean(params), 8 * sig)
    k = commutation_matrix(3, 3).to_dense()
    np.testing.assert_allclose(variance(params), 8 * (np.eye(9) + k) @ np.kron(sig, sig))
    v = vec(8 * sig)
    np.testing.assert_allclose(second_moment(params) - np.outer(v, v), variance(params))


def test_inverse_wishart_mean(rng):
    sig = random_spd(rng, 2)
    np.testing.assert_allclose(mean(EwParams(9, sig, inverse=True)), sig / 6)


def test_nw_inverse_moments_guard():
    with pytest.raises(MomentDoesNotExistError):
        nw_inverse_moments(5, 2)
    m, second = nw_inverse_moments(12, 3)
    assert m.shape == (3, 3) and second.shape == (9, 9)
