import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_lab import DomainError
from poisson_lab.conditions import (_sup_pair_difference, check_increment_convergence,
                                    check_log_harmonic_cap, check_scale_modulus,
                                    check_window_stationarity)
from poisson_lab.process import WindowSpec
from poisson_lab.schedules import (IntensitySchedule, ScaleFunction, log_harmonic_schedule,
                                   ratio_shift_schedule, stationary_schedule)


class IdealSchedule(IntensitySchedule):
    """rate(k) = lam * (a(k/K) - a((k-1)/K)) on the clock t -> [K t]."""

    family = "ideal"

    def __init__(self, lam, a, k_total):
        super().__init__(lam, "bernoulli", scale=a)
        self.k_total = k_total

    def row_length(self, n):
        return self.k_total

    def _raw_rates(self, n):
        return self.lam * np.diff(self.scale(np.arange(self.k_total + 1) / self.k_total))


def test_sup_pair_difference_matches_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(50):
        f = rng.normal(size=rng.integers(2, 30))
        brute = max(abs(f[j] - f[i]) for i in range(f.size) for j in range(i + 1, f.size))
        sup, (i, j) = _sup_pair_difference(f)
        assert sup == pytest.approx(brute, abs=1e-15)
        assert i < j and abs(f[j] - f[i]) == pytest.approx(sup, abs=1e-15)


def test_scale_modulus_values():
    rep = check_scale_modulus(ScaleFunction.identity(), 0.1)
    assert rep.sup_discrepancy == pytest.approx(0.1, abs=1e-12)
    assert rep.passed and rep.condition_id == "F3a" and rep.lam is None
    rep = check_scale_modulus(ScaleFunction.power(2.0), 0.1)
    assert rep.sup_discrepancy == pytest.approx(1 - 0.9 ** 2, abs=1e-12)
    with pytest.raises(DomainError):
        check_scale_modulus(ScaleFunction.identity(), 0.0)


def test_stationary_increment_bound():
    s = stationary_schedule(1.0)
    rep = check_increment_convergence(s, s.time_change(100), ScaleFunction.identity(), 1.0, 100)
    assert rep.analytic_bound == pytest.approx(0.02)
    assert rep.sup_discrepancy <= 0.02 and rep.passed
    assert rep.condition_id == "F3b"


def test_stationary_window_bound():
    s = stationary_schedule(1.0)
    rep = check_window_stationarity(s, WindowSpec.linear(1000, 0.1), 1.0)
    assert rep.sup_discrepancy <= 1.0 / 1000 + 1e-15
    assert rep.passed and rep.condition_id == "F3c"


def test_geometric_ids():
    s = stationary_schedule(1.0, kind="corrected_geometric")
    rep = check_increment_convergence(s, s.time_change(100), ScaleFunction.identity(), 1.0, 100)
    assert rep.condition_id == "G3b"
    assert check_window_stationarity(s, WindowSpec.linear(100, 0.1), 1.0).condition_id == "G3c"


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([ScaleFunction.identity(), ScaleFunction.power(2.0), ScaleFunction.power(0.7),
                        ScaleFunction.piecewise_linear([0, 0.3, 0.5, 1], [0, 0.5, 0.6, 1])]),
       st.integers(100, 400), st.floats(0.05, 0.9), st.floats(0.2, 3.0))
def test_idealized_schedule_has_zero_discrepancy(a, k, delta, lam):
    s = IdealSchedule(lam, a, k)
    tc = s.time_change(k)
    rep = check_increment_convergence(s, tc, a, lam, k, grid=k)
    assert rep.sup_discrepancy <= 1e-12
    window = WindowSpec.from_time_change(tc, delta)
    rep = check_window_stationarity(s, window, lam, delta=window.m / k, target="lambda_delta_a", a=a)
    assert rep.sup_discrepancy <= 1e-12
    if a.name == "identity":
        rep = check_window_stationarity(s, window, lam, delta=window.m / k)
        assert rep.sup_discrepancy <= 1e-12


def test_log_harmonic_example():
    s = log_harmonic_schedule(1.0, 0.5, kn=100)
    cap = math.log(10 / 9)
    rep = check_log_harmonic_cap(s, 1)
    assert rep.analytic_bound == pytest.approx(cap, rel=1e-14)
    assert rep.sup_discrepancy <= cap and rep.passed
    rep = check_increment_convergence(s, s.time_change(1), ScaleFunction.identity(), 1.0, 1)
    assert rep.sup_discrepancy <= cap + 5 / math.sqrt(100)


def test_ratio_shift_window_sums_close():
    s = ratio_shift_schedule(1.0)
    reps = [check_window_stationarity(s, WindowSpec.linear(n, 0.1), 1.0).sup_discrepancy
            for n in (100, 1000)]
    assert reps[1] < reps[0] < 0.02


def test_window_longer_than_row():
    s = stationary_schedule(1.0)
    with pytest.raises(DomainError):
        check_window_stationarity(s, WindowSpec(10, 0.5, 11), 1.0)


def test_reports_serialize():
    s = log_harmonic_schedule(1.0, 0.5, kn=100)
    for rep in (check_log_harmonic_cap(s, 1), check_scale_modulus(ScaleFunction.identity(), 0.1)):
        doc = json.loads(json.dumps(dataclasses.asdict(rep)))
        assert doc["condition_id"] == rep.condition_id
        assert doc["sup_discrepancy"] == rep.sup_discrepancy
