"""Intensity schedules, time changes and scale functions for triangular arrays.

A schedule gives, for each row ``n``, the row length ``k_n`` and the per-entry
rates: success probabilities for Bernoulli arrays, failure probabilities
``q`` for corrected-geometric arrays. Four families are provided:

``stationary``
    ``rate(k, n) = lam / n`` on a row of length ``n``.
``log_harmonic``
    ``rate(k, n) = lam_n / (k * b_n)`` with ``b_n = H_{k_n}``, on a row of
    length ``[k_n ** (1 + eps)]`` and time change ``t -> [k_n ** (eps + t)]``.
``alternating``
    ``rate(k, n) = (lam + (-1)**k eps_n) / n`` on a row of length ``k_n < n``.
``ratio_shift``
    ``rate(k, n) = lam_n / (b_n (1 + 1/(k + n)))`` with
    ``b_n = sum_j (1 + 1/(n + j))**-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import DomainError

EULER_GAMMA = 0.5772156649015329
KINDS = ("bernoulli", "corrected_geometric")
FAMILIES = ("stationary", "log_harmonic", "alternating", "ratio_shift")


def guarded_floor(x):
    """Floor with a one-ulp guard band, so that ``29 - 1ulp`` floors to 29."""
    x = np.asarray(x, dtype=np.float64)
    return np.floor(x + np.spacing(np.abs(x))).astype(np.int64)


def _check_times(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(~((t >= 0.0) & (t <= 1.0))):
        raise DomainError("times must lie in [0, 1]")
    return t


def _unit_grid(size):
    # i / size is correctly rounded, so coarse grids embed in refined ones
    return np.arange(size + 1, dtype=np.float64) / size


class TimeChange:
    """Non-decreasing integer map ``t -> k_n(t)`` with ``k_n(0) = 0``."""

    def __init__(self, n: int, k_total: int, func: Callable, name: str):
        self.n = n
        self.k_total = int(k_total)
        self.name = name
        self._func = func

    def __call__(self, t):
        t = _check_times(t)
        out = np.clip(self._func(t), 0, self.k_total)
        out = np.where(t == 0.0, 0, out)
        return int(out) if out.ndim == 0 else out

    eval = __call__

    def __repr__(self):
        return f"TimeChange({self.name}, n={self.n}, k_total={self.k_total})"

    @classmethod
    def linear(cls, n: int, k_total: int) -> TimeChange:
        """``t -> [k_total * t]``."""
        return cls(n, k_total, lambda t: guarded_floor(k_total * t), "linear")

    @classmethod
    def power(cls, n: int, base: float, epsilon: float) -> TimeChange:
        """``t -> [base ** (epsilon + t)]`` for ``t > 0``, and 0 at ``t = 0``."""
        k_total = int(guarded_floor(float(base) ** (epsilon + 1.0)))
        return cls(n, k_total, lambda t: guarded_floor(float(base) ** (epsilon + t)),
                   "power")

    def jump_times(self, grid: Optional[int] = None) -> np.ndarray:
        """Smallest grid time at which each index ``1..k_total`` is reached."""
        size = grid or 10 * max(self.k_total, 1)
        g = _unit_grid(size)
        vals = self(g)
        idx = np.searchsorted(vals, np.arange(1, self.k_total + 1), side="left")
        return g[idx]

    def window_length(self, delta: float, grid: int = 1000) -> int:
        """``max_t k_n(min(t + delta, 1)) - k_n(t)`` over a ``grid``-point t-grid."""
        t = _unit_grid(grid)
        return int(np.max(self(np.minimum(t + delta, 1.0)) - self(t)))


class ScaleFunction:
    """Non-decreasing ``a: [0, 1] -> [0, 1]`` with ``a(0) = 0`` and ``a(1) = 1``."""

    def __init__(self, func: Callable, name: str, inverse: Optional[Callable] = None,
                 params: Optional[dict] = None):
        self._func = func
        self._inverse = inverse
        self.name = name
        self.params = dict(params or {})

    def __call__(self, t):
        t = _check_times(t)
        out = np.asarray(self._func(t), dtype=np.float64)
        return float(out) if out.ndim == 0 else out

    eval = __call__

    def __repr__(self):
        return f"ScaleFunction({self.name}, {self.params})"

    def increment(self, s, t):
        return self(t) - self(s)

    def inverse(self, u):
        """Generalized inverse ``inf{t : a(t) >= u}``."""
        u = np.asarray(u, dtype=np.float64)
        if self._inverse is not None:
            return self._inverse(u)
        lo = np.zeros_like(u)
        hi = np.ones_like(u)
        # invariant: a(hi) >= u; a(lo) < u unless u <= a(0)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            ok = self._func(mid) >= u
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        return np.where(u <= self._func(np.zeros_like(u)), 0.0, hi)

    @classmethod
    def identity(cls) -> ScaleFunction:
        return cls(lambda t: t, "identity", inverse=lambda u: u)

    @classmethod
    def power(cls, exponent: float) -> ScaleFunction:
        if not exponent > 0:
            raise DomainError("exponent must be > 0")
        return cls(lambda t: t ** exponent, "power",
                   inverse=lambda u: u ** (1.0 / exponent),
                   params={"exponent": exponent})

    @classmethod
    def piecewise_linear(cls, knots, values) -> ScaleFunction:
        knots = np.asarray(knots, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if (knots.shape != values.shape or knots[0] != 0.0 or knots[-1] != 1.0
                or values[0] != 0.0 or values[-1] != 1.0):
            raise DomainError("knots and values must run from 0 to 1")
        if np.any(np.diff(knots) <= 0) or np.any(np.diff(values) < 0):
            raise DomainError("knots must increase and values must not decrease")
        return cls(lambda t: np.interp(t, knots, values), "piecewise_linear",
                   params={"knots": knots.tolist(), "values": values.tolist()})


@dataclass(frozen=True)
class ScheduleDiagnostics:
    row_sum: float
    sup_rate: float
    b_n: Optional[float] = None
    euler_gamma: float = EULER_GAMMA


def _rule(value):
    if callable(value):
        return value
    value = float(value)
    return lambda n: value


def constant_rule(value: float) -> Callable[[int], float]:
    return _rule(value)


def log_interp_rule(lam: float, c: float) -> Callable[[int], float]:
    """``n -> lam * (1 + c / log n)``, a sequence tending to ``lam``."""
    return lambda n: lam * (1.0 + c / math.log(n))


def inverse_log_rule(c: float = 1.0) -> Callable[[int], float]:
    """``n -> c / log n``."""
    return lambda n: c / math.log(n)


def harmonic_bn(m: int) -> float:
    """Harmonic number ``H_m = 1 + 1/2 + ... + 1/m``."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    return math.fsum(1.0 / np.arange(1, m + 1, dtype=np.float64))


class IntensitySchedule:
    """Base class; subclasses provide ``row_length``, ``_raw_rates`` and ``time_change``."""

    family = ""
    open_at_zero = False

    def __init__(self, lam: float, kind: str = "bernoulli", params: Optional[dict] = None,
                 scale: Optional[ScaleFunction] = None):
        if kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
        if not lam > 0:
            raise DomainError(f"lambda must be > 0, got {lam}")
        self.lam = float(lam)
        self.kind = kind
        self.params = dict(params or {})
        self.scale = scale or ScaleFunction.identity()

    def __repr__(self):
        return f"{type(self).__name__}(lam={self.lam}, kind={self.kind!r}, params={self.params})"

    def _validate_n(self, n_values):
        for n in n_values:
            self.rates(n)

    def row_length(self, n: int) -> int:
        raise NotImplementedError

    def _raw_rates(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def time_change(self, n: int) -> TimeChange:
        return TimeChange.linear(n, self.row_length(n))

    def normalizer(self, n: int) -> Optional[float]:
        return None

    def rates(self, n: int) -> np.ndarray:
        """Rates of row ``n`` as an array indexed ``0..k_n - 1``."""
        if n < 1:
            raise DomainError(f"row index must be >= 1, got {n}")
        r = np.asarray(self._raw_rates(n), dtype=np.float64)
        if r.size == 0 or np.any(~((r > 0.0) & (r < 1.0))):
            raise DomainError(f"{self.family} rates leave (0, 1) at n={n}")
        return r

    def rate(self, k: int, n: int) -> float:
        """Rate of entry ``k`` (1-based) of row ``n``."""
        r = self.rates(n)
        if not 1 <= k <= r.size:
            raise DomainError(f"k must lie in 1..{r.size}, got {k}")
        return float(r[k - 1])


class StationarySchedule(IntensitySchedule):
    family = "stationary"

    def row_length(self, n):
        return n

    def _raw_rates(self, n):
        if self.lam >= n:
            raise DomainError(f"lambda/n must be < 1, got lambda={self.lam}, n={n}")
        return np.full(n, self.lam / n)


class LogHarmonicSchedule(IntensitySchedule):
    family = "log_harmonic"
    open_at_zero = True

    def __init__(self, lam, epsilon, lambda_n=None, kn=None, kind="bernoulli"):
        if not 0.0 < epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
        super().__init__(lam, kind, {"epsilon": epsilon})
        self.epsilon = float(epsilon)
        self.lambda_n = _rule(lam if lambda_n is None else lambda_n)
        self.kn = _rule(kn) if kn is not None else (lambda n: n)

    def base(self, n):
        k = int(self.kn(n))
        if k < 2:
            raise DomainError(f"k_n must be >= 2, got {k}")
        return k

    def time_change(self, n):
        return TimeChange.power(n, self.base(n), self.epsilon)

    def row_length(self, n):
        return self.time_change(n).k_total

    def normalizer(self, n):
        return harmonic_bn(self.base(n))

    def log_cap(self, n) -> float:
        """``log(1 + 1/a_n)`` with ``a_n = k_n ** eps - 1``."""
        a_n = self.base(n) ** self.epsilon - 1.0
        return math.log1p(1.0 / a_n)

    def _raw_rates(self, n):
        k_n = self.base(n)
        b_n = self.normalizer(n)
        lam_n = self.lambda_n(n)
        if not 0 < lam_n <= k_n * k_n * b_n:
            raise DomainError(f"lambda_n must lie in (0, k_n^2 b_n], got {lam_n}")
        k = np.arange(1, self.row_length(n) + 1, dtype=np.float64)
        return lam_n / (k * b_n)


class AlternatingSchedule(IntensitySchedule):
    family = "alternating"

    def __init__(self, lam, epsilon_n, kn=None, kind="bernoulli"):
        super().__init__(lam, kind, {})
        self.epsilon_n = _rule(epsilon_n)
        self._eps_exact = None if callable(epsilon_n) else Fraction(epsilon_n)
        self.kn = _rule(kn) if kn is not None else (lambda n: n - 1)

    def row_length(self, n):
        k = int(self.kn(n))
        if not 1 <= k < n:
            raise DomainError(f"k_n must satisfy 1 <= k_n < n, got k_n={k}, n={n}")
        return k

    def _raw_rates(self, n):
        eps = self.epsilon_n(n)
        if abs(eps) > self.lam / 2:
            raise DomainError(f"|epsilon_n| must be <= lambda/2, got {eps}")
        if (self.lam + abs(eps)) / n >= 1.0:
            raise DomainError(f"(lambda + epsilon_n)/n must be < 1 at n={n}")
        k = np.arange(1, self.row_length(n) + 1)
        sign = np.where(k % 2 == 0, 1.0, -1.0)
        return (self.lam + sign * eps) / n

    def exact_rates(self, n) -> list:
        """Rates as exact fractions; needs a constant ``epsilon_n``."""
        if self._eps_exact is None:
            raise DomainError("exact rates need a constant epsilon_n")
        self.rates(n)
        lam = Fraction(self.lam)
        eps = self._eps_exact
        return [(lam + (eps if k % 2 == 0 else -eps)) / n
                for k in range(1, self.row_length(n) + 1)]


class RatioShiftSchedule(IntensitySchedule):
    family = "ratio_shift"

    def __init__(self, lam, lambda_n=None, kind="bernoulli"):
        super().__init__(lam, kind, {})
        self.lambda_n = _rule(lam if lambda_n is None else lambda_n)

    def row_length(self, n):
        return n

    def normalizer(self, n):
        j = np.arange(1, n + 1, dtype=np.float64)
        return math.fsum((n + j) / (n + j + 1.0))

    def _raw_rates(self, n):
        b_n = self.normalizer(n)
        lam_n = self.lambda_n(n)
        if not 0 < lam_n < b_n:
            raise DomainError(f"lambda_n must lie in (0, b_n), got {lam_n} vs b_n={b_n}")
        k = np.arange(1, n + 1, dtype=np.float64)
        return lam_n / (b_n * (1.0 + 1.0 / (k + n)))


def stationary_schedule(lam, kind="bernoulli", n_values=()) -> StationarySchedule:
    s = StationarySchedule(lam, kind)
    s._validate_n(n_values)
    return s


def log_harmonic_schedule(lam, epsilon, lambda_n=None, kn=None, kind="bernoulli",
                          n_values=()) -> LogHarmonicSchedule:
    """Log-harmonic family; its time change is ``schedule.time_change(n)``."""
    s = LogHarmonicSchedule(lam, epsilon, lambda_n=lambda_n, kn=kn, kind=kind)
    s._validate_n(n_values)
    return s


def alternating_schedule(lam, epsilon_n, kn=None, kind="bernoulli",
                         n_values=()) -> AlternatingSchedule:
    s = AlternatingSchedule(lam, epsilon_n, kn=kn, kind=kind)
    s._validate_n(n_values)
    return s


def ratio_shift_schedule(lam, lambda_n=None, kind="bernoulli", n_values=()) -> RatioShiftSchedule:
    s = RatioShiftSchedule(lam, lambda_n=lambda_n, kind=kind)
    s._validate_n(n_values)
    return s


def row_sum(schedule: IntensitySchedule, n: int) -> ScheduleDiagnostics:
    r = schedule.rates(n)
    return ScheduleDiagnostics(row_sum=math.fsum(r), sup_rate=float(r.max()),
                               b_n=schedule.normalizer(n))


def window_sums(rates, length: int) -> list:
    """All sums of ``length`` consecutive rates (works on fractions too)."""
    if not 1 <= length <= len(rates):
        raise DomainError(f"length must lie in 1..{len(rates)}")
    acc = sum(rates[:length])
    out = [acc]
    for j in range(length, len(rates)):
        acc = acc + rates[j] - rates[j - length]
        out.append(acc)
    return out
