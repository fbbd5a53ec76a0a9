"""Numerical checks of the schedule conditions behind the non-stationary FLTs.

Three families of checks, named ``F3a``/``F3b``/``F3c`` for Bernoulli arrays
and ``G3a``/``G3b``/``G3c`` for corrected-geometric arrays:

* ``*3a`` -- uniform modulus of the scale function, ``sup_t a(t + delta) - a(t)``;
* ``*3b`` -- ``sup_{s<t} |Delta rate_n(s, t) - lam * Delta a(s, t)|`` on a grid;
* ``*3c`` -- ``sup_j |rate_j + ... + rate_{j+m-1} - lam * delta|``.

All sups are exact maxima over finite grids computed from prefix sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import DomainError
from .process import WindowSpec
from .schedules import (IntensitySchedule, LogHarmonicSchedule, ScaleFunction,
                        StationarySchedule, TimeChange, _unit_grid)

BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class ConditionReport:
    condition_id: str
    n: int
    grid_resolution: int
    sup_discrepancy: float
    analytic_bound: Optional[float]
    tolerance: float
    passed: bool
    lam: Optional[float]
    worst_point: tuple
    target: str = ""
    delta: Optional[float] = None


def _condition_id(kind: str, letter: str) -> str:
    return ("G3" if kind == "corrected_geometric" else "F3") + letter


def _report(cid, n, grid, sup, bound, tolerance, lam, worst, target="", delta=None):
    if tolerance is None:
        tolerance = max(bound or 0.0, 5.0 / math.sqrt(n))
    passed = sup <= tolerance and (bound is None or sup <= bound * (1.0 + BOUND_SLACK))
    return ConditionReport(cid, int(n), int(grid), float(sup), bound, float(tolerance),
                           bool(passed), float(lam), tuple(float(x) for x in worst),
                           target, delta)


def _check_lam(lam):
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")


def _prefix(rates):
    out = np.zeros(rates.size + 1)
    np.cumsum(rates, out=out[1:])
    return out


def _sup_pair_difference(f):
    """``max_{i<j} |f[j] - f[i]|`` and the maximizing pair, in one pass."""
    if f.size < 2:
        return 0.0, (0, 0)
    run_min = np.minimum.accumulate(f)
    run_max = np.maximum.accumulate(f)
    up = f[1:] - run_min[:-1]
    down = run_max[:-1] - f[1:]
    j_up = int(np.argmax(up))
    j_down = int(np.argmax(down))
    if up[j_up] >= down[j_down]:
        j = j_up + 1
        i = int(np.argmin(f[:j]))
        return float(up[j_up]), (i, j)
    j = j_down + 1
    i = int(np.argmax(f[:j]))
    return float(down[j_down]), (i, j)


def check_scale_modulus(a: ScaleFunction, delta: float, grid: int = 1000,
                        tolerance: Optional[float] = None,
                        condition_id: str = "F3a") -> ConditionReport:
    """``sup_t a(min(t + delta, 1)) - a(t)`` over a ``grid``-cell t-grid.

    Default tolerance is ``sqrt(delta)``; the condition is a limit in delta so
    any fixed-delta threshold is a convention.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    t = _unit_grid(grid)
    d = a(np.minimum(t + delta, 1.0)) - a(t)
    i = int(np.argmax(d))
    tol = math.sqrt(delta) if tolerance is None else tolerance
    sup = float(d[i])
    return ConditionReport(condition_id, 0, grid, max(sup, 0.0), None, float(tol), sup <= tol,
                           None, (float(t[i]),), "scale_modulus", delta)


def _known_increment_bound(schedule, lam, n):
    if isinstance(schedule, StationarySchedule) and lam == schedule.lam:
        return 2.0 * lam / n
    return None


def check_increment_convergence(schedule: IntensitySchedule, tc: TimeChange,
                                a: ScaleFunction, lam: float, n: int, grid: int = 1000,
                                tolerance: Optional[float] = None) -> ConditionReport:
    """Sup over grid pairs ``s < t`` of ``|Delta rate_n(s, t) - lam Delta a(s, t)|``.

    For schedules whose time change jumps at ``0+`` (log-harmonic) the grid
    omits ``t = 0``, matching the pair domain ``]0, 1]^2``.
    """
    _check_lam(lam)
    if grid < 100:
        raise DomainError(f"grid must be >= 100, got {grid}")
    rates = schedule.rates(n)
    if tc.k_total != rates.size:
        raise DomainError("time change and schedule disagree on the row length")
    t = _unit_grid(grid)
    if schedule.open_at_zero:
        t = t[1:]
    f = _prefix(rates)[tc(t)] - lam * a(t)
    sup, (i, j) = _sup_pair_difference(f)
    bound = _known_increment_bound(schedule, lam, n)
    return _report(_condition_id(schedule.kind, "b"), n, grid, sup, bound, tolerance, lam,
                   (t[i], t[j]), "lambda_delta_a")


def check_window_stationarity(schedule: IntensitySchedule, window: WindowSpec, lam: float,
                              delta: Optional[float] = None, target: str = "lambda_delta",
                              a: Optional[ScaleFunction] = None,
                              tolerance: Optional[float] = None) -> ConditionReport:
    """Sup over window starts ``j`` of ``|window sum - target|``.

    ``target="lambda_delta"`` compares with ``lam * delta``;
    ``target="lambda_delta_a"`` compares the window starting at index ``j``
    with ``lam * (a(t_j + delta) - a(t_j))``, ``t_j = (j - 1) / k_n``.
    """
    _check_lam(lam)
    delta = window.delta if delta is None else delta
    rates = schedule.rates(window.n)
    k, m = rates.size, window.m
    if m > k:
        raise DomainError(f"window length {m} exceeds row length {k}")
    p = _prefix(rates)
    sums = p[m:] - p[:k - m + 1]
    if target == "lambda_delta":
        ref = lam * delta
    elif target == "lambda_delta_a":
        a = a or schedule.scale
        tj = np.arange(k - m + 1) / k
        ref = lam * (a(np.minimum(tj + delta, 1.0)) - a(tj))
    else:
        raise DomainError(f"unknown target {target!r}")
    d = np.abs(sums - ref)
    j = int(np.argmax(d))
    bound = None
    if isinstance(schedule, StationarySchedule) and lam == schedule.lam and target == "lambda_delta":
        bound = lam / window.n
    return _report(_condition_id(schedule.kind, "c"), window.n, k - m + 1, float(d[j]), bound,
                   tolerance, lam, (j + 1,), target, delta)


def check_log_harmonic_cap(schedule: LogHarmonicSchedule, n: int,
                           grid: int = 1000) -> ConditionReport:
    """Sup over ``0 < s < t <= 1`` of
    ``|lam_n (log k_n(t) - log k_n(s)) / log k_n - lam (t - s)|``,
    against the cap ``log(1 + 1/a_n)``, ``a_n = k_n ** eps - 1``.
    """
    tc = schedule.time_change(n)
    t = _unit_grid(grid)[1:]
    lam_n = schedule.lambda_n(n)
    f = lam_n * np.log(tc(t)) / math.log(schedule.base(n)) - schedule.lam * t
    sup, (i, j) = _sup_pair_difference(f)
    cap = schedule.log_cap(n)
    return _report(_condition_id(schedule.kind, "b"), n, grid, sup, cap, cap, schedule.lam,
                   (t[i], t[j]), "log_cap")
