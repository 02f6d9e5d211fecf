import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellwishart import _oracles as orc
from ellwishart.distributions import EwParams, second_moment
from ellwishart.errors import MemoryBudgetError, MomentDoesNotExistError
from ellwishart.generators import Gaussian, GeneralizedGaussian, Kotz, StudentT
from ellwishart.kronecker import (KronMomentRequest, _shift_cached, build_A, build_G, check_memory_budget,
                                  inverse_wishart_kron_moment, kron_memory_estimate,
                                  kron_moment, kron_moment_matrix, mc_kron_moment,
                                  rearrange_second_moment, wishart_kron_moment)
from ellwishart.linalg import vec
from oracles import random_spd, wishart_kron_wick


@pytest.mark.parametrize("p,k", [(1, 5), (2, 1), (2, 2), (2, 3), (2, 4), (3, 2), (3, 3)])
def test_matches_wick_enumeration(p, k):
    rng = np.random.default_rng(p * 10 + k)
    sig = random_spd(rng, p)
    got = wishart_kron_moment(7, sig, k)
    want = wishart_kron_wick(7, sig, k)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * np.abs(want).max())


def test_python_backend_matches_wick(pure_python):
    from ellwishart.kronecker import clear_operator_cache
    clear_operator_cache()
    sig = random_spd(np.random.default_rng(0), 2)
    np.testing.assert_allclose(wishart_kron_moment(5, sig, 3), wishart_kron_wick(5, sig, 3),
                               rtol=1e-12)
    clear_operator_cache()


def _dense_printed_G(p):
    # G with the extra identity and 1/2 factor; known to be wrong
    k = orc.dense_commutation(p, p)
    i = np.eye(p)
    kk = np.kron(k, k)
    mid = np.kron(np.kron(i, k), i)
    return 0.5 * (kk @ mid + np.eye(p ** 4)) @ np.kron(k, np.eye(p * p) + k)


def test_G_and_printed_variant():
    p = 2
    k = orc.dense_commutation(p, p)
    i = np.eye(p)
    want = (np.kron(k, k) @ np.kron(np.kron(i, k), i) @ np.kron(k, np.eye(p * p) + k))
    np.testing.assert_array_equal(build_G(p).to_dense(), want)
    assert not np.allclose(_dense_printed_G(p), want)


@given(st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=15, deadline=None)
def test_order_two_closed_form(p, seed):
    sig = random_spd(np.random.default_rng(seed), p)
    want = vec(orc.wishart_kron2(11, sig))
    np.testing.assert_allclose(wishart_kron_moment(11, sig, 2), want, rtol=1e-12)


def test_order_three_closed_form():
    sig = random_spd(np.random.default_rng(3), 2)
    np.testing.assert_allclose(wishart_kron_moment(6, sig, 3), vec(orc.wishart_kron3(6, sig)),
                               rtol=1e-12)


@pytest.mark.parametrize("k", range(1, 7))
def test_univariate_chi_square(k):
    got = wishart_kron_moment(9, np.eye(1), k)
    assert got[0] == pytest.approx(orc.chi2_moment(9, k), rel=1e-13)


@pytest.mark.parametrize("gen", [StudentT(15.0), GeneralizedGaussian(0.8), Kotz(1.3, 1.1, 0.4)],
                         ids=repr)
def test_elliptical_order_two_matches_second_moment(gen):
    sig = random_spd(np.random.default_rng(8), 2)
    params = EwParams(6, sig, gen)
    k2 = kron_moment_matrix(kron_moment(params, 2), 2, 2)
    np.testing.assert_allclose(rearrange_second_moment(k2), second_moment(params), rtol=1e-11)


def test_rearrangement_is_involution(rng):
    m = rng.standard_normal((9, 9))
    np.testing.assert_array_equal(rearrange_second_moment(rearrange_second_moment(m)), m)
    np.testing.assert_array_equal(rearrange_second_moment(m), orc.rearrange(m))


def test_inverse_univariate():
    # S = 1/X with X ~ chi^2_n: E[S^k] = 1 / ((n-2)(n-4)...(n-2k))
    n = 14
    for k in range(1, 5):
        got = inverse_wishart_kron_moment(n, np.eye(1), k)[0]
        want = 1.0 / np.prod([n - 2 * j for j in range(1, k + 1)])
        assert got == pytest.approx(want, rel=1e-12)


def test_inverse_order_two(rng):
    sig = random_spd(rng, 3)
    n = 12
    params = EwParams(n, sig, inverse=True)
    k2 = kron_moment_matrix(kron_moment(params, 2), 3, 2)
    m = orc.inverse_wishart_mean(n, sig)
    want = orc.inverse_wishart_variance(n, sig) + np.outer(vec(m), vec(m))
    np.testing.assert_allclose(orc.rearrange(k2), want, rtol=1e-10)


def test_inverse_recursion_identity():
    # the order-2 moment solves A(1) x = shift (E[S] ⊗ vec Sigma)
    n, p = 11, 2
    sig = random_spd(np.random.default_rng(2), p, cond=3)
    k1 = inverse_wishart_kron_moment(n, sig, 1)
    k2 = inverse_wishart_kron_moment(n, sig, 2)
    lhs = build_A(p, 1, n).apply(k2)
    rhs = _shift_cached(p, 1).apply(np.kron(k1, vec(sig)))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_inverse_existence():
    params = EwParams(6, np.eye(2), inverse=True)
    with pytest.raises(MomentDoesNotExistError):
        kron_moment(params, 3)


def test_mc_agrees(rng):
    params = EwParams(5, random_spd(rng, 2), StudentT(14.0))
    est, se = mc_kron_moment(params, 2, 100_000, rng)
    exact = kron_moment(params, 2)
    assert np.max(np.abs(est - exact) / se) < 4.5


def test_mc_needs_enough_samples(rng):
    with pytest.raises(ValueError):
        mc_kron_moment(EwParams(5, np.eye(2)), 2, 10, rng)


def test_memory_guard():
    assert kron_memory_estimate(3, 6) > 64 * 2 ** 20 > kron_memory_estimate(3, 5)
    check_memory_budget(3, 5)
    with pytest.raises(MemoryBudgetError, match="budget"):
        wishart_kron_moment(5, np.eye(3), 6)
    # an explicit budget lifts the limit
    check_memory_budget(3, 6, budget=2 ** 30)


def test_request_object():
    params = EwParams(6, np.eye(2), Gaussian())
    np.testing.assert_allclose(KronMomentRequest(params, 2).compute(), kron_moment(params, 2))
