import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_lab import DomainError
from poisson_lab.schedules import (EULER_GAMMA, ScaleFunction, TimeChange, alternating_schedule,
                                   guarded_floor, harmonic_bn, inverse_log_rule,
                                   log_harmonic_schedule, log_interp_rule, ratio_shift_schedule,
                                   row_sum, stationary_schedule, window_sums)


def test_guarded_floor_absorbs_rounding():
    assert guarded_floor(0.29 * 100) == 29
    assert guarded_floor(2.9999) == 2
    assert guarded_floor(3.0) == 3


def test_stationary_rates_and_errors():
    s = stationary_schedule(2.0)
    np.testing.assert_array_equal(s.rates(10), np.full(10, 0.2))
    assert s.rate(3, 10) == 0.2
    with pytest.raises(DomainError):
        stationary_schedule(5.0, n_values=[4])
    with pytest.raises(DomainError):
        s.rate(11, 10)
    with pytest.raises(DomainError):
        stationary_schedule(1.0, kind="poisson")


def test_linear_time_change():
    tc = stationary_schedule(1.0).time_change(100)
    assert tc(0.0) == 0 and tc(1.0) == 100
    assert tc(0.29) == 29
    np.testing.assert_array_equal(tc(np.array([0.5, 0.505, 0.51])), [50, 50, 51])
    with pytest.raises(DomainError):
        tc(1.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_power_time_change_monotone(eps, s, t):
    tc = TimeChange.power(100, 100, eps)
    s, t = min(s, t), max(s, t)
    assert tc(s) <= tc(t) <= tc.k_total


def test_harmonic_number_asymptotics():
    assert harmonic_bn(1) == 1.0
    assert harmonic_bn(4) == pytest.approx(25 / 12, rel=1e-15)
    assert harmonic_bn(10**6) - math.log(10**6) == pytest.approx(EULER_GAMMA, abs=1e-6)


def test_log_harmonic_example():
    s = log_harmonic_schedule(1.0, 0.5, kn=100)
    b = harmonic_bn(100)
    assert s.row_length(1) == 1000
    assert s.rate(1, 1) == pytest.approx(1.0 / b, rel=1e-15)
    tc = s.time_change(1)
    assert tc(0.0) == 0 and tc(0.5) == 100 and tc(1.0) == 1000
    assert tc(1e-9) == 10
    assert s.log_cap(1) == pytest.approx(0.1053605, abs=1e-7)
    assert s.log_cap(1) == pytest.approx(math.log(10 / 9), rel=1e-14)
    # full row sum is H_1000 / H_100 by direct fraction summation
    expected = float(sum(Fraction(1, k) for k in range(1, 1001)) / sum(
        Fraction(1, k) for k in range(1, 101)))
    assert row_sum(s, 1).row_sum == pytest.approx(expected, rel=1e-13)
    assert row_sum(s, 1).b_n == b


def test_log_harmonic_errors():
    with pytest.raises(DomainError):
        log_harmonic_schedule(1.0, 1.5)
    with pytest.raises(DomainError):
        log_harmonic_schedule(1.0, 0.5, n_values=[1])
    with pytest.raises(DomainError):
        log_harmonic_schedule(1e6, 0.5, kn=2, n_values=[5])


def test_alternating_row_sum():
    n = 55
    eps = inverse_log_rule(1.0)
    s = alternating_schedule(1.0, eps)
    d = row_sum(s, n)
    assert abs(d.row_sum - s.row_length(n) / n) <= eps(n)
    assert s.row_length(n) == n - 1


def test_alternating_errors():
    with pytest.raises(DomainError):
        alternating_schedule(1.0, 0.6, n_values=[10])
    with pytest.raises(DomainError):
        alternating_schedule(1.0, 0.1, kn=10, n_values=[10])


@pytest.mark.parametrize("n", [10, 11, 30])
def test_alternating_window_sums_take_three_values(n):
    lam, eps = Fraction(1), Fraction(0.1)
    s = alternating_schedule(1.0, 0.1)
    exact = s.exact_rates(n)
    for ell in range(1, len(exact)):
        allowed = {(lam * (ell + 1) + d) / n for d in (-eps, 0, eps)}
        assert set(window_sums(exact, ell + 1)) <= allowed


def test_ratio_shift_normalizer_sandwich():
    for k in (10, 100, 1000):
        b = ratio_shift_schedule(1.0).normalizer(k)
        integral = (k - 1) - math.log((2 * k + 1) / (k + 2))
        assert integral + (k + 1) / (k + 2) <= b <= integral + 2 * k / (2 * k + 1)
    assert abs(ratio_shift_schedule(1.0).normalizer(100) / 100 - 1) <= 0.01
    assert abs(ratio_shift_schedule(1.0).normalizer(1000) / 1000 - 1) <= 0.001


def test_ratio_shift_rates_below_lambda_over_b():
    s = ratio_shift_schedule(2.0)
    r = s.rates(100)
    assert np.all(r < 2.0 / s.normalizer(100))
    with pytest.raises(DomainError):
        ratio_shift_schedule(200.0, n_values=[100])


@pytest.mark.parametrize("make", [
    lambda: stationary_schedule(1.0),
    lambda: log_harmonic_schedule(1.0, 0.5),
    lambda: alternating_schedule(1.0, inverse_log_rule(0.5)),
    lambda: ratio_shift_schedule(1.0, lambda_n=log_interp_rule(1.0, 0.5)),
])
def test_sup_rate_decreases(make):
    s = make()
    assert row_sum(s, 1000).sup_rate < row_sum(s, 100).sup_rate
    assert s.row_length(1000) >= s.row_length(100)


@pytest.mark.parametrize("make", [ScaleFunction.identity, lambda: ScaleFunction.power(2.0),
                                  lambda: ScaleFunction.piecewise_linear([0, 0.4, 0.6, 1],
                                                                         [0, 0.5, 0.5, 1])])
def test_scale_function_inverse(make):
    a = make()
    u = np.linspace(0.0, 1.0, 101)
    t = a.inverse(u)
    assert np.all(a(np.asarray(t)) >= u - 1e-12)
    assert a(0.0) == 0.0 and a(1.0) == 1.0


def test_piecewise_linear_flat_inverse_skips_flat_part():
    a = ScaleFunction.piecewise_linear([0, 0.4, 0.6, 1], [0, 0.5, 0.5, 1])
    assert a.inverse(np.array(0.5)) == pytest.approx(0.4)
    assert a.inverse(np.array(0.5000001)) > 0.6
    with pytest.raises(DomainError):
        ScaleFunction.piecewise_linear([0, 1], [0, 0.5])


def test_window_sums_errors():
    with pytest.raises(DomainError):
        window_sums([0.1, 0.2], 3)
