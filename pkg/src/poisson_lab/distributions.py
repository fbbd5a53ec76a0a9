"""Exact probability mass functions on the non-negative integers.

Everything here is deterministic and exact up to floating point: binomial,
Poisson, Poisson-binomial and corrected-geometric sum laws, plus the total
variation distance used to measure Poisson approximation at finite size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammainc, gammaln

from . import DomainError, kernels

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probabilities on ``0..kmax`` plus the mass lying beyond ``kmax``."""

    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("probs must be a non-empty 1-D array")
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise DomainError("probabilities must lie in [0, 1]")
        if not self.tail_mass >= 0.0:
            raise DomainError(f"tail_mass must be >= 0, got {self.tail_mass}")
        total = math.fsum(probs) + self.tail_mass
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"pmf is not normalized: total mass {total!r}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    def __eq__(self, other):
        if not isinstance(other, Pmf):
            return NotImplemented
        return np.array_equal(self.probs, other.probs) and self.tail_mass == other.tail_mass

    @property
    def kmax(self) -> int:
        return self.probs.size - 1

    def __getitem__(self, k: int) -> float:
        if 0 <= k <= self.kmax:
            return float(self.probs[k])
        return 0.0

    def mean(self) -> float:
        """Mean of the retained part (exact when ``tail_mass == 0``)."""
        return float(np.dot(np.arange(self.probs.size), self.probs))

    @classmethod
    def point_mass(cls, k: int = 0) -> Pmf:
        probs = np.zeros(k + 1)
        probs[k] = 1.0
        return cls(probs, 0.0)


def _from_truncated(probs: np.ndarray) -> Pmf:
    # tail is whatever the retained entries leave over; never renormalize
    tail = 1.0 - math.fsum(probs)
    return Pmf(probs, max(tail, 0.0))


def poisson_pmf(lam: float, kmax: int) -> Pmf:
    """Poisson(lam) on ``0..kmax`` via the recurrence ``p[k] = p[k-1] * lam / k``.

    The tail mass is the regularized incomplete gamma ``P(kmax + 1, lam)``,
    i.e. ``1 - sum(probs)`` evaluated without cancellation.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if kmax < 0:
        raise DomainError(f"kmax must be >= 0, got {kmax}")
    if lam > 700:
        raise DomainError("lambda > 700 underflows exp(-lambda)")
    probs = np.empty(kmax + 1)
    probs[0] = math.exp(-lam)
    for k in range(1, kmax + 1):
        probs[k] = probs[k - 1] * lam / k
    return Pmf(probs, float(gammainc(kmax + 1, lam)))


def binomial_pmf(n: int, p: float) -> Pmf:
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        probs = np.zeros(n + 1)
        probs[n if p == 1.0 else 0] = 1.0
        return Pmf(probs, 0.0)
    k = np.arange(n + 1)
    logc = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    probs = np.exp(logc + k * math.log(p) + (n - k) * math.log1p(-p))
    return Pmf(np.minimum(probs, 1.0), 0.0)


def _check_open_unit(values, name):
    values = np.asarray(values, dtype=np.float64).ravel()
    if np.any(~((values > 0.0) & (values < 1.0))):
        raise DomainError(f"every {name} must lie in the open interval (0, 1)")
    return values


def poisson_binomial_pmf(p_vec) -> Pmf:
    """Law of a sum of independent Bernoulli(p_k), by sequential convolution."""
    p = _check_open_unit(p_vec, "success probability")
    probs = np.clip(kernels.poisson_binomial(p), 0.0, 1.0)
    return Pmf(probs, 0.0)


def corrected_geometric_sum_pmf(q_vec, kmax: int) -> Pmf:
    """Law of a sum of independent corrected geometrics, truncated at ``kmax``.

    Each summand has ``P(X = j) = (1 - q) q**j`` for ``j >= 0``.
    """
    q = _check_open_unit(q_vec, "failure probability")
    if kmax < 0:
        raise DomainError(f"kmax must be >= 0, got {kmax}")
    probs = np.clip(kernels.geometric_convolve(q, int(kmax)), 0.0, 1.0)
    return _from_truncated(probs)


def shifted_negative_binomial_pmf(n: int, q: float, kmax: int) -> Pmf:
    """Closed form for ``NB(n, 1 - q) - n``: ``C(n + j - 1, j) (1 - q)**n q**j``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    j = np.arange(kmax + 1)
    logc = gammaln(n + j) - gammaln(j + 1) - gammaln(n)
    probs = np.exp(logc + n * math.log1p(-q) + j * math.log(q))
    return _from_truncated(np.minimum(probs, 1.0))


class TVDistance(NamedTuple):
    value: float
    upper: float


def tv_bounds(a: Pmf, b: Pmf) -> TVDistance:
    """Total variation distance, point estimate and truncation-safe upper bound.

    The point estimate treats the two tails as a single common atom; the upper
    bound assumes the tails are disjoint.
    """
    size = max(a.probs.size, b.probs.size)
    pa = np.zeros(size)
    pb = np.zeros(size)
    pa[:a.probs.size] = a.probs
    pb[:b.probs.size] = b.probs
    body = 0.5 * math.fsum(np.abs(pa - pb))
    value = body + 0.5 * abs(a.tail_mass - b.tail_mass)
    upper = body + 0.5 * (a.tail_mass + b.tail_mass)
    return TVDistance(min(max(value, 0.0), 1.0), min(upper, 1.0))


def tv_distance(a: Pmf, b: Pmf) -> float:
    return tv_bounds(a, b).value


def squared_rate_sum(p_vec) -> float:
    p = np.asarray(p_vec, dtype=np.float64).ravel()
    return math.fsum(p * p)
