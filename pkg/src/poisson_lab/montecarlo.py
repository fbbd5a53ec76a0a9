"""Replication-parallel Monte Carlo for triangular arrays and their Poisson limits.

Every variate is addressed by ``(master seed, replication, index, stream)``
through a Philox4x32-10 counter, so results do not depend on how
replications are split across workers. Replications are processed in fixed
chunks of ``CHUNK`` and merged in chunk order; ``POISSON_LAB_THREADS`` only
caps the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import DomainError, kernels
from .distributions import (Pmf, corrected_geometric_sum_pmf, poisson_binomial_pmf,
                            poisson_pmf, tv_distance)
from .process import StepPath, WindowSpec
from .schedules import IntensitySchedule, ScaleFunction, TimeChange

THREADS_ENV = "POISSON_LAB_THREADS"
CHUNK = 4096
MIN_REPS = 10_000
STREAM_ROWS = 0
STREAM_LIMIT = 1
Z95 = 1.959963984540054


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _map_chunks(fn, reps):
    starts = range(0, reps, CHUNK)
    jobs = [(s, min(CHUNK, reps - s)) for s in starts]
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        parts = [fn(s, c) for s, c in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def _row_arrays(schedule: IntensitySchedule, n: int):
    rates = schedule.rates(n)
    if schedule.kind == "bernoulli":
        return rates, np.zeros_like(rates), 0
    # log q through log1p near q = 1
    logq = np.where(rates > 0.5, np.log1p(-(1.0 - rates)), np.log(rates))
    return rates, logq, 1


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def sample_rows(schedule: IntensitySchedule, n: int, seed: int, rep0: int, nrep: int) -> np.ndarray:
    rates, logq, kind = _row_arrays(schedule, n)
    return kernels.sample_rows(rates, logq, kind, _check_seed(seed), rep0, nrep, STREAM_ROWS)


def sample_row(schedule: IntensitySchedule, n: int, seed: int, rep: int) -> np.ndarray:
    """Row ``n`` of replication ``rep``; entry ``k`` depends only on ``(seed, rep, k)``.

    Bernoulli entries are ``U < p``; corrected-geometric entries are
    ``floor(log U / log q)``.
    """
    return sample_rows(schedule, n, seed, rep, 1)[0]


@dataclass
class EmpiricalPmf:
    counts: dict
    total: int

    def __post_init__(self):
        if self.total <= 0:
            raise DomainError("an empirical pmf needs at least one value")
        if sum(self.counts.values()) != self.total:
            raise DomainError("counts do not add up to total")

    def merge(self, other: EmpiricalPmf) -> EmpiricalPmf:
        counts = dict(self.counts)
        for k, c in other.counts.items():
            counts[k] = counts.get(k, 0) + c
        return EmpiricalPmf(dict(sorted(counts.items())), self.total + other.total)

    def to_pmf(self) -> Pmf:
        probs = np.zeros(max(self.counts) + 1)
        for k, c in self.counts.items():
            probs[k] = c / self.total
        return Pmf(probs, 0.0)

    def mean(self) -> float:
        return sum(k * c for k, c in self.counts.items()) / self.total


def empirical_pmf(values) -> EmpiricalPmf:
    values = np.asarray(values, dtype=np.int64).ravel()
    if values.size == 0:
        raise DomainError("empty stream")
    if np.any(values < 0):
        raise DomainError("values must be non-negative")
    keys, counts = np.unique(values, return_counts=True)
    return EmpiricalPmf({int(k): int(c) for k, c in zip(keys, counts)}, int(values.size))


def effective_support(reps: int, *pmfs: Pmf) -> int:
    """Number of values carrying at least ``1/reps`` mass under some pmf."""
    size = max(p.probs.size for p in pmfs)
    stacked = np.zeros((len(pmfs), size))
    for i, p in enumerate(pmfs):
        stacked[i, :p.probs.size] = p.probs
    return max(1, int(np.count_nonzero(stacked.max(axis=0) >= 1.0 / reps)))


def mc_budget(support: int, reps: int) -> float:
    """Monte Carlo allowance ``3 sqrt(S / (2 reps))`` on an empirical TV distance."""
    return 3.0 * math.sqrt(support / (2.0 * reps))


@dataclass
class IncrementResult:
    j: int
    t_start: float
    t_end: float
    index_start: int
    index_end: int
    target_mean: float
    empirical: EmpiricalPmf
    tv_empirical: float
    tv_exact: float
    tv_empirical_vs_exact: float
    mc_budget: float


@dataclass
class IndependenceResult:
    j: int
    statistic: float
    dof: int
    quantile_999: float
    p_value: float

    @property
    def extreme(self) -> bool:
        return self.statistic > self.quantile_999


@dataclass
class FidiReport:
    n: int
    lam: float
    reps: int
    seed: int
    times: list
    increments: list = field(default_factory=list)
    independence: list = field(default_factory=list)


def _exact_segment_law(schedule, rates, kmax):
    if rates.size == 0:
        return Pmf.point_mass(0)
    if schedule.kind == "bernoulli":
        return poisson_binomial_pmf(rates)
    return corrected_geometric_sum_pmf(rates, kmax)


def _target_law(mean, kmax):
    return Pmf.point_mass(0) if mean <= 0 else poisson_pmf(mean, kmax)


def independence_statistic(x, y, top: int = 2) -> IndependenceResult:
    """Pearson chi-square on the contingency of ``min(x, top)`` and ``min(y, top)``."""
    cx = np.minimum(np.asarray(x), top)
    cy = np.minimum(np.asarray(y), top)
    table = np.zeros((top + 1, top + 1), dtype=np.int64)
    np.add.at(table, (cx, cy), 1)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    dof = (table.shape[0] - 1) * (table.shape[1] - 1)
    if dof == 0:
        return IndependenceResult(0, 0.0, 0, 0.0, 1.0)
    res = stats.chi2_contingency(table, correction=False)
    return IndependenceResult(0, float(res.statistic), int(dof),
                              float(stats.chi2.ppf(0.999, dof)), float(res.pvalue))


def _check_times(times):
    times = np.asarray(times, dtype=np.float64).ravel()
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] <= 0 or times[-1] > 1:
        raise DomainError("times must be strictly increasing within (0, 1]")
    return times


def increment_samples(schedule, tc: TimeChange, n: int, times, reps: int, seed: int) -> np.ndarray:
    """``(reps, len(times))`` matrix of ``Y_n(t_j) - Y_n(t_{j-1})``."""
    times = _check_times(times)
    rates, logq, kind = _row_arrays(schedule, n)
    if tc.k_total != rates.size:
        raise DomainError("time change and schedule disagree on the row length")
    cuts = np.concatenate(([0], tc(times))).astype(np.int64)
    seed = _check_seed(seed)
    return _map_chunks(
        lambda s, c: kernels.segment_sums(rates, logq, kind, seed, s, c, cuts, STREAM_ROWS),
        reps)


def fidi_experiment(schedule: IntensitySchedule, tc: TimeChange, a: ScaleFunction, lam: float,
                    times, n: int, reps: int, seed: int, top_bin: int = 2) -> FidiReport:
    """Empirical law of each increment against ``Poisson(lam * Delta a)``.

    For each increment the report holds the empirical TV to the Poisson
    target, the exact TV of the array law to that target (the finite-n bias),
    and a chi-square independence statistic for each adjacent pair, binned at
    ``0, 1, ..., >= top_bin``.
    """
    if reps < MIN_REPS:
        raise DomainError(f"reps must be >= {MIN_REPS}, got {reps}")
    times = _check_times(times)
    sums = increment_samples(schedule, tc, n, times, reps, seed)
    rates = schedule.rates(n)
    cuts = np.concatenate(([0], tc(times)))
    bounds = np.concatenate(([0.0], times))
    report = FidiReport(n, float(lam), int(reps), int(seed), times.tolist())
    for j in range(times.size):
        emp = empirical_pmf(sums[:, j])
        mean = float(lam * (a(bounds[j + 1]) - a(bounds[j])))
        kmax = max(max(emp.counts), int(mean + 10 * math.sqrt(mean) + 10))
        target = _target_law(mean, kmax)
        exact = _exact_segment_law(schedule, rates[cuts[j]:cuts[j + 1]], kmax)
        emp_pmf = emp.to_pmf()
        support = effective_support(reps, target, exact)
        report.increments.append(IncrementResult(
            j + 1, float(bounds[j]), float(bounds[j + 1]), int(cuts[j]), int(cuts[j + 1]),
            mean, emp, tv_distance(emp_pmf, target), tv_distance(exact, target),
            tv_distance(emp_pmf, exact), mc_budget(support, reps)))
    for j in range(times.size - 1):
        res = independence_statistic(sums[:, j], sums[:, j + 1], top_bin)
        res.j = j + 1
        report.independence.append(res)
    return report


@dataclass
class TightnessReport:
    n: int
    delta: float
    eta: float
    m: int
    reps: int
    exceed_count: int
    exceed_rate: float
    ci_halfwidth: float
    paper_bound: float
    lam: float
    clamped: bool = False


def default_window(tc: TimeChange, n: int, delta: float) -> WindowSpec:
    """``[n (delta + 1/n)]`` for the clock ``t -> [n t]``, else the grid maximum."""
    if tc.name == "linear" and tc.k_total == n:
        return WindowSpec.linear(n, delta)
    return WindowSpec.from_time_change(tc, delta)


def window_maxima(schedule, n: int, m: int, reps: int, seed: int) -> np.ndarray:
    """Per-replication maximum of ``m`` consecutive row entries."""
    rates, logq, kind = _row_arrays(schedule, n)
    m = min(m, rates.size)
    seed = _check_seed(seed)
    return _map_chunks(
        lambda s, c: kernels.window_max_rows(rates, logq, kind, seed, s, c, m, STREAM_ROWS),
        reps)


def _tightness_report(maxima, n, window, eta, lam, k_total):
    reps = maxima.size
    count = int(np.count_nonzero(maxima > eta))
    rate = count / reps
    ci = Z95 * math.sqrt(rate * (1.0 - rate) / reps)
    return TightnessReport(int(n), float(window.delta), float(eta), min(window.m, k_total),
                           int(reps), count, rate, ci, window.delta * lam / eta, float(lam),
                           window.m > k_total)


def tightness_experiment(schedule: IntensitySchedule, tc: TimeChange, lam: float, n: int,
                         delta: float, eta: float, reps: int, seed: int,
                         window: Optional[WindowSpec] = None) -> TightnessReport:
    """Fraction of replications whose window modulus exceeds ``eta``.

    ``paper_bound = delta * lam / eta`` is recorded next to the empirical rate;
    for ``eta < 1`` a single jump already exceeds, so the rate tends to
    ``P(row sum >= 1)`` instead.
    """
    return tightness_sweep(schedule, tc, lam, n, [delta], [eta], reps, seed,
                           windows=None if window is None else [window])[0]


def tightness_sweep(schedule, tc, lam, n, deltas, etas, reps, seed, windows=None) -> list:
    """Reports for every ``(delta, eta)``; maxima are computed once per delta."""
    if reps < MIN_REPS:
        raise DomainError(f"reps must be >= {MIN_REPS}, got {reps}")
    for eta in etas:
        if not eta > 0:
            raise DomainError(f"eta must be > 0, got {eta}")
    windows = windows or [default_window(tc, n, d) for d in deltas]
    out = []
    for window in windows:
        maxima = window_maxima(schedule, n, window.m, reps, seed)
        for eta in etas:
            out.append(_tightness_report(maxima, n, window, eta, lam, tc.k_total))
    return out


def _arrival_counts(lam, a: ScaleFunction, seed, reps):
    u0 = kernels.uniforms(seed, 0, reps, 1, STREAM_LIMIT)[:, 0]
    return stats.poisson.ppf(u0, lam * a(1.0)).astype(np.int64)


def _arrival_times(a: ScaleFunction, seed, rep_ids, k_ids):
    u = kernels.uniform_pairs(seed, rep_ids, k_ids, STREAM_LIMIT)
    return np.asarray(a.inverse(u * a(1.0)), dtype=np.float64)


def simulate_scaled_poisson(lam: float, a: ScaleFunction, seed: int, rep: int = 0) -> StepPath:
    """One path of ``N(lam * a(.))``.

    Draws ``K ~ Poisson(lam * a(1))`` and ``K`` uniform levels on ``[0, a(1)]``,
    each mapped to ``inf{t : a(t) >= u}``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    seed = _check_seed(seed)
    u0 = kernels.uniform_pairs(seed, np.array([rep], dtype=np.int64),
                               np.array([0], dtype=np.int64), STREAM_LIMIT)
    k = int(stats.poisson.ppf(u0[0], lam * a(1.0)))
    if k == 0:
        return StepPath.empty()
    times = _arrival_times(a, seed, np.full(k, rep, dtype=np.int64),
                           np.arange(1, k + 1, dtype=np.int64))
    times = np.sort(times)
    return StepPath(times, np.ones(k, dtype=np.int64))


def scaled_poisson_values(lam: float, a: ScaleFunction, times, seed: int, reps: int) -> np.ndarray:
    """``(reps, len(times))`` values of the paths of :func:`simulate_scaled_poisson`."""
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    seed = _check_seed(seed)
    times = np.asarray(times, dtype=np.float64).ravel()
    counts = _arrival_counts(lam, a, seed, reps)
    rep_ids = np.repeat(np.arange(reps, dtype=np.int64), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    k_ids = np.arange(rep_ids.size, dtype=np.int64) - starts + 1
    arrivals = _arrival_times(a, seed, rep_ids, k_ids)
    out = np.empty((reps, times.size), dtype=np.int64)
    for i, t in enumerate(times):
        out[:, i] = np.bincount(rep_ids[arrivals <= t], minlength=reps)
    return out
