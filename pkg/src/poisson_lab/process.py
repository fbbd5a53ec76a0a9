"""Partial-sum step paths ``Y_n(t) = X_1 + ... + X_{k_n(t)}`` and their modulus."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import DomainError, kernels
from .schedules import TimeChange, guarded_floor


@dataclass(frozen=True, eq=False)
class StepPath:
    """Right-continuous non-decreasing integer path on ``[0, 1]``.

    ``value(t)`` is the total size of the jumps at times ``<= t``. Jumps at
    equal times are merged on construction.
    """

    jump_times: np.ndarray
    jump_sizes: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=np.float64).ravel()
        sizes = np.asarray(self.jump_sizes, dtype=np.int64).ravel()
        if times.shape != sizes.shape:
            raise DomainError("jump_times and jump_sizes differ in length")
        if np.any(~((times >= 0.0) & (times <= 1.0))):
            raise DomainError("jump times must lie in [0, 1]")
        if np.any(np.diff(times) < 0):
            raise DomainError("jump times must be sorted")
        if np.any(sizes < 1):
            raise DomainError("jump sizes must be >= 1")
        times, inverse = np.unique(times, return_inverse=True)
        merged = np.zeros(times.size, dtype=np.int64)
        np.add.at(merged, inverse, sizes)
        cum = np.concatenate(([0], np.cumsum(merged)))
        for arr in (times, merged, cum):
            arr.setflags(write=False)
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", merged)
        object.__setattr__(self, "_cum", cum)

    def __eq__(self, other):
        if not isinstance(other, StepPath):
            return NotImplemented
        return (np.array_equal(self.jump_times, other.jump_times)
                and np.array_equal(self.jump_sizes, other.jump_sizes))

    @classmethod
    def empty(cls) -> StepPath:
        return cls(np.empty(0), np.empty(0, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self._cum[-1])

    def value(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(~((t >= 0.0) & (t <= 1.0))):
            raise DomainError("t must lie in [0, 1]")
        out = self._cum[np.searchsorted(self.jump_times, t, side="right")]
        return int(out) if out.ndim == 0 else out

    def to_csv(self) -> str:
        """Plot data: the value at 0 then the value after each jump."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "value"])
        w.writerow(["0", self.value(0.0)])
        for t, v in zip(self.jump_times, self._cum[1:]):
            if t > 0.0:
                w.writerow([f"{t:.17g}", int(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> StepPath:
        rows = list(csv.DictReader(io.StringIO(text)))
        times = np.array([float(r["time"]) for r in rows])
        values = np.array([int(r["value"]) for r in rows], dtype=np.int64)
        sizes = np.diff(np.concatenate(([0], values)))
        keep = sizes > 0
        return cls(times[keep], sizes[keep])


def build_path(row, time_change: TimeChange, grid: int | None = None) -> StepPath:
    """Step path of the partial sums of ``row`` composed with ``time_change``.

    Index ``k`` enters at the smallest grid time where ``k_n(t) >= k``
    (default grid: ``10 * k_n`` cells).
    """
    row = np.asarray(row, dtype=np.int64).ravel()
    if row.size != time_change.k_total:
        raise DomainError(f"row has length {row.size}, time change expects {time_change.k_total}")
    if np.any(row < 0):
        raise DomainError("row entries must be non-negative")
    jt = time_change.jump_times(grid)
    mask = row > 0
    return StepPath(jt[mask], row[mask])


def path_value(path: StepPath, t: float) -> int:
    return path.value(t)


def _check_sorted(times):
    times = np.asarray(times, dtype=np.float64).ravel()
    if np.any(np.diff(times) < 0):
        raise DomainError("times must be sorted")
    return times


def fidi(path: StepPath, times) -> np.ndarray:
    return path.value(_check_sorted(times))


def increments(path: StepPath, times) -> np.ndarray:
    """Differences ``Y(t_j) - Y(t_{j-1})`` with ``Y(t_0) = 0``."""
    return np.diff(fidi(path, times), prepend=0)


@dataclass(frozen=True)
class WindowSpec:
    n: int
    delta: float
    m: int

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.m < 1:
            raise DomainError(f"window length must be >= 1, got {self.m}")

    @classmethod
    def linear(cls, n: int, delta: float) -> WindowSpec:
        """``m = [n (delta + 1/n)]`` for the time change ``t -> [n t]``."""
        if not 0.0 < delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {delta}")
        return cls(n, delta, int(guarded_floor(n * (delta + 1.0 / n))))

    @classmethod
    def from_time_change(cls, tc: TimeChange, delta: float, grid: int = 1000) -> WindowSpec:
        """``m = max_t k_n(t + delta) - k_n(t)`` over a t-grid (at least 1).

        The grid is refined to at least ``10 * k_n`` cells so that every step
        of the clock is resolved.
        """
        if not 0.0 < delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {delta}")
        grid = max(grid, 10 * tc.k_total)
        return cls(tc.n, delta, max(1, tc.window_length(delta, grid)))


class Modulus(NamedTuple):
    value: int
    m: int
    clamped: bool


def modulus(path: StepPath | None, window: WindowSpec, row) -> Modulus:
    """Largest sum of ``window.m`` consecutive entries of ``row``.

    For a non-decreasing path this bounds the oscillation over time pairs
    closer than ``delta``. A window longer than the row is clamped to the
    full row and flagged.
    """
    row = np.ascontiguousarray(row, dtype=np.int64).ravel()
    if path is not None and path.total != int(row.sum()):
        raise DomainError("path and row disagree on the total mass")
    m = window.m
    clamped = m > row.size
    if clamped:
        m = row.size
    if m == 0:
        return Modulus(0, 0, clamped)
    return Modulus(int(kernels.window_max(row, m)), m, clamped)
