import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pns_lab.distributions import (
    ChannelParams,
    PhotonDistribution,
    base_pns_map,
    binomial_thinning,
    choose_nmax,
    pns_distribution,
    poisson,
    poisson_upper_tail,
    pushforward_map,
)
from pns_lab.errors import InvalidParameterError

means = st.floats(min_value=1e-4, max_value=50.0)
mus = st.floats(min_value=1e-4, max_value=2.0)
fractions = st.floats(min_value=0.0, max_value=1.0)


def test_poisson_vacuum_matches_high_precision():
    # mpmath, 40 digits: e^-0.05
    assert poisson(0.05, 16)[0] == pytest.approx(0.9512294245007140091, rel=1e-15)


def test_poisson_ratio_identity():
    d = poisson(0.1, 16)
    assert d[1] / d[0] == pytest.approx(0.1, rel=1e-15)


@given(means)
def test_poisson_normalized(mean):
    d = poisson(mean, choose_nmax(mean))
    assert abs(d.total() - 1) <= 1e-12
    assert d.tail_mass >= 0


def test_poisson_small_nmax_keeps_tail():
    d = poisson(5.0, 2)
    assert d.tail_mass == pytest.approx(poisson_upper_tail(5.0, 3))
    assert d.tail_mass > 0.8


def test_poisson_rejects_nonpositive_mean():
    with pytest.raises(InvalidParameterError):
        poisson(0.0, 16)
    with pytest.raises(InvalidParameterError):
        poisson(-1.0, 16)


def test_poisson_rejects_small_nmax():
    with pytest.raises(InvalidParameterError):
        poisson(0.1, 1)


@pytest.mark.parametrize("mu", [1e-3, 0.1, 1.0, 5.0, 20.0])
def test_choose_nmax_meets_tail_cutoff(mu):
    n = choose_nmax(mu)
    assert n >= 16
    assert poisson_upper_tail(mu, n + 1) < 1e-15
    if n > 16:
        assert poisson_upper_tail(mu, n) >= 1e-15


def test_upper_tail_against_complement():
    mu = 0.7
    cdf = sum(mu**k / math.factorial(k) for k in range(3)) * math.exp(-mu)
    assert poisson_upper_tail(mu, 3) == pytest.approx(1 - cdf, rel=1e-12)


def test_pns_without_blocking_keeps_vacuum():
    assert pns_distribution(0.2, 0.0, 16)[0] == pytest.approx(math.exp(-0.2), rel=1e-15)


def test_pns_full_blocking_single_bin():
    # mpmath: (0.2^2/2) e^-0.2
    assert pns_distribution(0.2, 1.0, 16)[1] == pytest.approx(0.016374615061559637173, rel=1e-14)


def test_pns_rejects_bad_fraction():
    with pytest.raises(InvalidParameterError):
        pns_distribution(0.2, 1.5, 16)
    with pytest.raises(InvalidParameterError):
        pns_distribution(0.2, -0.1, 16)


@given(mus, fractions)
def test_pns_normalized(mu, b):
    d = pns_distribution(mu, b, choose_nmax(mu))
    assert abs(d.total() - 1) <= 1e-12


def test_base_map_examples():
    assert base_pns_map(0, 0.5) == {0: 1.0}
    assert base_pns_map(1, 0.25) == {0: 0.25, 1: 0.75}
    assert base_pns_map(3, 0.5) == {2: 1.0}


@settings(max_examples=100)
@given(mus, fractions)
def test_base_map_pushforward_reproduces_pns_formula(mu, b):
    n_max = choose_nmax(mu)
    pushed = pushforward_map(poisson(mu, n_max), lambda n: base_pns_map(n, b))
    closed = pns_distribution(mu, b, n_max)
    np.testing.assert_allclose(pushed.probs, closed.probs, rtol=0, atol=1e-12)


@given(mus, st.floats(min_value=0.01, max_value=1.0))
def test_lossy_channel_is_binomial_thinning(mu, eta):
    n_max = choose_nmax(mu)
    thinned = binomial_thinning(poisson(mu, n_max), eta)
    np.testing.assert_allclose(thinned.probs, poisson(mu * eta, n_max).probs, rtol=0, atol=1e-10)


def test_photon_distribution_invariants():
    with pytest.raises(InvalidParameterError):
        PhotonDistribution([0.5, 0.5], 0.0)
    with pytest.raises(InvalidParameterError):
        PhotonDistribution([0.5, 0.6, -0.1], 0.0)
    with pytest.raises(InvalidParameterError):
        PhotonDistribution([0.5, 0.4, 0.0], 0.0)
    d = PhotonDistribution([0.5, 0.4, 0.1], 0.0)
    with pytest.raises(ValueError):
        d.probs[0] = 1.0


@pytest.mark.parametrize("mu, eta", [(0.0, 0.5), (-1.0, 0.5), (0.1, 0.0), (0.1, 1.1), (math.nan, 0.5)])
def test_channel_params_validation(mu, eta):
    with pytest.raises(InvalidParameterError):
        ChannelParams(mu, eta)
