import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from poisson_lab import DomainError
from poisson_lab.distributions import (Pmf, binomial_pmf, corrected_geometric_sum_pmf,
                                       poisson_binomial_pmf, poisson_pmf,
                                       shifted_negative_binomial_pmf, squared_rate_sum,
                                       tv_bounds, tv_distance)

rates = st.lists(st.floats(1e-4, 1 - 1e-4), min_size=1, max_size=12)


def brute_force(p):
    out = np.zeros(len(p) + 1)
    for bits in itertools.product((0, 1), repeat=len(p)):
        out[sum(bits)] += math.prod(pk if b else 1 - pk for pk, b in zip(p, bits))
    return out


def test_pmf_rejects_bad_input():
    with pytest.raises(DomainError):
        Pmf(np.array([0.5, 0.6]))
    with pytest.raises(DomainError):
        Pmf(np.array([-0.1, 1.1]))
    with pytest.raises(DomainError):
        Pmf(np.array([]))
    with pytest.raises(DomainError):
        Pmf(np.array([0.5]), 0.2)


def test_pmf_is_immutable():
    pmf = Pmf(np.array([0.25, 0.75]))
    with pytest.raises(ValueError):
        pmf.probs[0] = 0.5
    assert pmf == Pmf([0.25, 0.75])
    assert pmf[5] == 0.0 and pmf[1] == 0.75


def test_poisson_pmf_matches_scipy():
    pmf = poisson_pmf(3.7, 40)
    np.testing.assert_allclose(pmf.probs, stats.poisson.pmf(np.arange(41), 3.7), rtol=1e-12)
    assert pmf.tail_mass == pytest.approx(stats.poisson.sf(40, 3.7), rel=1e-10)


def test_poisson_tail_is_tiny_but_exact():
    pmf = poisson_pmf(1.0, 40)
    assert 0.0 < pmf.tail_mass < 1e-40
    assert pmf.tail_mass == pytest.approx(stats.poisson.sf(40, 1.0), rel=1e-8)


def test_poisson_pmf_errors():
    for lam in (0.0, -1.0, 800.0):
        with pytest.raises(DomainError):
            poisson_pmf(lam, 10)


def test_binomial_matches_scipy():
    pmf = binomial_pmf(30, 0.17)
    np.testing.assert_allclose(pmf.probs, stats.binom.pmf(np.arange(31), 30, 0.17), rtol=1e-11)
    assert binomial_pmf(4, 0.0).probs[0] == 1.0
    assert binomial_pmf(4, 1.0).probs[4] == 1.0


@settings(max_examples=60, deadline=None)
@given(rates)
def test_poisson_binomial_matches_enumeration(p):
    pmf = poisson_binomial_pmf(p)
    np.testing.assert_allclose(pmf.probs, brute_force(p), atol=1e-13)
    assert pmf.tail_mass == 0.0


@settings(max_examples=60, deadline=None)
@given(rates)
def test_poisson_binomial_mean_is_rate_sum(p):
    assert poisson_binomial_pmf(p).mean() == pytest.approx(math.fsum(p), rel=1e-10, abs=1e-12)


def test_poisson_binomial_identical_rates_is_binomial():
    np.testing.assert_allclose(poisson_binomial_pmf(np.full(50, 0.03)).probs,
                               binomial_pmf(50, 0.03).probs, atol=1e-14)


@pytest.mark.parametrize("p", [[0.0, 0.5], [1.0], [0.2, 1.2]])
def test_poisson_binomial_rejects_closed_endpoints(p):
    with pytest.raises(DomainError):
        poisson_binomial_pmf(p)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.floats(0.001, 0.9))
def test_identical_geometrics_are_shifted_negative_binomial(n, q):
    kmax = 80
    a = corrected_geometric_sum_pmf(np.full(n, q), kmax)
    b = shifted_negative_binomial_pmf(n, q, kmax)
    np.testing.assert_allclose(a.probs, b.probs, atol=1e-10)
    np.testing.assert_allclose(b.probs, stats.nbinom.pmf(np.arange(kmax + 1), n, 1 - q),
                               rtol=1e-9, atol=1e-300)


def test_geometric_sum_matches_direct_convolution():
    q = np.array([0.1, 0.35, 0.6])
    kmax = 50
    direct = np.array([1.0])
    for qi in q:
        direct = np.convolve(direct, (1 - qi) * qi ** np.arange(kmax + 1))[:kmax + 1]
    pmf = corrected_geometric_sum_pmf(q, kmax)
    np.testing.assert_allclose(pmf.probs, direct, atol=1e-15)
    assert pmf.tail_mass == pytest.approx(1 - direct.sum(), abs=1e-14)


def test_tv_distance_basic():
    a = Pmf([0.5, 0.5])
    b = Pmf([0.25, 0.25, 0.5])
    assert tv_distance(a, b) == pytest.approx(0.5)
    assert tv_distance(a, a) == 0.0


@settings(max_examples=40, deadline=None)
@given(rates, rates)
def test_tv_is_a_metric_bounded_by_one(p, q):
    a, b = poisson_binomial_pmf(p), poisson_binomial_pmf(q)
    c = poisson_pmf(1.0, 30)
    d_ab = tv_distance(a, b)
    assert 0.0 <= d_ab <= 1.0
    assert d_ab == pytest.approx(tv_distance(b, a), abs=1e-15)
    assert d_ab <= tv_distance(a, c) + tv_distance(c, b) + 1e-12


def test_tv_bounds_bracket_truncation():
    a = poisson_pmf(2.0, 6)
    b = poisson_pmf(2.5, 6)
    exact = 0.5 * np.abs(stats.poisson.pmf(np.arange(200), 2.0)
                         - stats.poisson.pmf(np.arange(200), 2.5)).sum()
    value, upper = tv_bounds(a, b)
    assert value <= exact + 1e-12 <= upper + 1e-12


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_stationary_tv_below_squared_rate_sum(n):
    p = np.full(n, 1.0 / n)
    tv = tv_distance(poisson_binomial_pmf(p), poisson_pmf(1.0, 60))
    assert tv <= squared_rate_sum(p)
    assert squared_rate_sum(p) == pytest.approx(1.0 / n)
