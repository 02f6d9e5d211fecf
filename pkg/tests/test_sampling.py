import math

import numpy as np
import pytest

from ellwishart.distributions import EwParams, mean, nw_inverse_moments, second_moment
from ellwishart.errors import NotPositiveDefiniteError, SingularSampleError
from ellwishart.fitting import ks_two_sample
from ellwishart.generators import Gaussian, Kotz, StudentT
from ellwishart.sampling import (SamplerMethod, sample, sample_ew, sample_nw,
                                 sample_wishart_identity)
from oracles import random_spd


def _z_max(draws, want):
    se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
    return float(np.max(np.abs(draws.mean(axis=0) - want) / se))


def test_shapes_and_symmetry(rng):
    params = EwParams(6, random_spd(rng, 3), StudentT(8))
    one = sample(params, rng)
    assert one.shape == (3, 3)
    many = sample(params, rng, size=10)
    assert many.shape == (10, 3, 3)
    np.testing.assert_array_equal(many, many.transpose(0, 2, 1))
    assert np.all(np.linalg.eigvalsh(many) > 0)


def test_seed_reproducible():
    params = EwParams(6, np.eye(2), Kotz(1.2, 0.9, 0.7))
    a = sample(params, np.random.default_rng(3), size=5)
    b = sample(params, np.random.default_rng(3), size=5)
    np.testing.assert_array_equal(a, b)


def test_wishart_identity_bartlett_mean():
    s = sample_wishart_identity(7, 3, np.random.default_rng(1), size=40_000)
    assert _z_max(s.reshape(len(s), -1), 7 * np.eye(3).ravel()) < 4.5


@pytest.mark.parametrize("gen", [Gaussian(), StudentT(9.0), Kotz(2.0, 0.7, 1.1)], ids=repr)
def test_ew_second_moment(gen):
    rng = np.random.default_rng(11)
    sig = random_spd(rng, 2, cond=4)
    params = EwParams(7, sig, gen)
    s = sample_ew(params, rng, size=100_000)
    v = s.transpose(0, 2, 1).reshape(len(s), -1)
    outer = np.einsum("ki,kj->kij", v, v).reshape(len(s), -1)
    assert _z_max(outer, second_moment(params).ravel()) < 4.5
    assert _z_max(s.reshape(len(s), -1), mean(params).ravel()) < 4.5


def test_iew_mean_t():
    rng = np.random.default_rng(5)
    params = EwParams(12, random_spd(rng, 2), StudentT(7.0), inverse=True)
    s = sample(params, rng, size=100_000)
    assert _z_max(s.reshape(len(s), -1), mean(params).ravel()) < 4.5


def test_bartlett_and_naive_agree():
    params = EwParams(9, np.diag([1.0, 2.0, 0.5]), StudentT(6.0))
    a = sample(params, np.random.default_rng(2), SamplerMethod.BARTLETT, size=5000)
    b = sample(params, np.random.default_rng(3), SamplerMethod.NAIVE, size=5000)
    assert ks_two_sample(np.trace(a, axis1=1, axis2=2), np.trace(b, axis1=1, axis2=2)).p > 0.01


def test_nw_trace_and_inverse_mean():
    v = sample_nw(12, 3, np.random.default_rng(4), size=60_000)
    np.testing.assert_allclose(np.trace(v, axis1=1, axis2=2), 1.0, atol=1e-14)
    inv = np.linalg.inv(v)
    want, _ = nw_inverse_moments(12, 3)
    assert _z_max(inv.reshape(len(inv), -1), want.ravel()) < 4.5


def test_rejects_non_spd_sigma():
    with pytest.raises(NotPositiveDefiniteError):
        EwParams(5, np.diag([1.0, -1.0]))


def test_iew_singular_draws_raise():
    params = EwParams(5, np.diag([1.0, 1e-14]), inverse=True)
    with pytest.raises(SingularSampleError):
        sample(params, np.random.default_rng(0), size=3)
