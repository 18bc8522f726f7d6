"""Finite unions of closed intervals and interval-length functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, disjoint closed intervals; touching intervals are merged."""

    intervals: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _canonical(self.intervals))

    @classmethod
    def of(cls, *pairs) -> "IntervalSet":
        return cls(tuple(pairs))

    @classmethod
    def from_mask(cls, times, mask, t_end: float) -> "IntervalSet":
        """Set of a piecewise-constant indicator: ``mask[i]`` holds on
        ``[times[i], times[i+1]]`` (the last piece ends at ``t_end``)."""
        times = np.asarray(times, dtype=float)
        mask = np.asarray(mask, dtype=bool)
        if times.size == 0:
            return cls()
        ends = np.append(times[1:], t_end)
        diff = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
        starts = np.nonzero(diff == 1)[0]
        stops = np.nonzero(diff == -1)[0] - 1
        return cls(tuple(zip(times[starts].tolist(), ends[stops].tolist())))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __contains__(self, t: float) -> bool:
        return self.locate(t) is not None

    def locate(self, t: float):
        """The interval containing t, or None."""
        iv = self.intervals
        if not iv:
            return None
        starts = [a for a, _ in iv]
        k = np.searchsorted(starts, t, side="right") - 1
        if k >= 0 and iv[k][0] <= t <= iv[k][1]:
            return iv[k]
        return None

    def contains_array(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if not self.intervals:
            return np.zeros(ts.shape, dtype=bool)
        arr = np.asarray(self.intervals)
        k = np.searchsorted(arr[:, 0], ts, side="right") - 1
        ok = k >= 0
        kk = np.clip(k, 0, None)
        return ok & (ts <= arr[kk, 1])

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return union(self, other)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        return intersect(self, other)


def _canonical(pairs: Iterable) -> tuple:
    cleaned = []
    for p in pairs:
        a, b = float(p[0]), float(p[1])
        if math.isnan(a) or math.isnan(b):
            raise ValueError("interval endpoints must not be NaN")
        if a > b:
            raise ValueError(f"interval [{a}, {b}] has a > b")
        cleaned.append((a, b))
    cleaned.sort()
    out = []
    for a, b in cleaned:
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return tuple(out)


def union(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return IntervalSet(a.intervals + b.intervals)


def intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    out = []
    i = j = 0
    x, y = a.intervals, b.intervals
    while i < len(x) and j < len(y):
        lo = max(x[i][0], y[j][0])
        hi = min(x[i][1], y[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if x[i][1] < y[j][1]:
            i += 1
        else:
            j += 1
    return IntervalSet(tuple(out))


def truncate(S: IntervalSet, window) -> IntervalSet:
    lo, hi = window
    return intersect(S, IntervalSet(((lo, hi),)))


def total_length(S: IntervalSet) -> float:
    return float(sum(b - a for a, b in S.intervals))


def component_length(t: float, S: IntervalSet) -> float:
    """Length of the component of S containing t (0 when t is not in S)."""
    iv = S.locate(t)
    return 0.0 if iv is None else iv[1] - iv[0]


@dataclass(frozen=True)
class TimeGrid:
    """``center + step * {-m, ..., m}`` with ``m = ceil(half_extent / step)``."""

    center: float
    step: float
    half_extent: float

    def __post_init__(self):
        if not self.step > 0 or not self.half_extent > 0:
            raise ValueError("step and half_extent must be positive")

    @property
    def m(self) -> int:
        # the tiny slack keeps exact multiples such as 10 / 0.1 from rounding up
        return int(math.ceil(self.half_extent / self.step - 1e-9))

    @property
    def points(self) -> np.ndarray:
        return self.center + self.step * np.arange(-self.m, self.m + 1)

    @property
    def span(self) -> float:
        return 2 * self.m * self.step

    def __len__(self) -> int:
        return 2 * self.m + 1


def run_length(mask, step: float) -> float:
    """Length of the run of True values through the middle entry of ``mask``
    (an odd-length grid centred on the query time)."""
    mask = np.asarray(mask, dtype=bool)
    c = mask.size // 2
    if not mask[c]:
        return 0.0
    left = mask[:c][::-1]
    right = mask[c + 1:]
    nl = c if left.all() else int(np.argmin(left))
    nr = right.size if right.all() else int(np.argmin(right))
    return (nl + nr) * step


def discretized_length(t: float, membership: Callable | IntervalSet, grid: TimeGrid) -> float:
    """Longest grid-point run through t on which ``membership`` holds.

    ``membership`` is a predicate on times (vectorised predicates are used
    as such) or an IntervalSet; only grid points are ever checked.
    """
    if not math.isclose(grid.center, t, rel_tol=0, abs_tol=1e-12):
        raise ValueError("grid must be centred at t")
    pts = grid.points
    if isinstance(membership, IntervalSet):
        mask = membership.contains_array(pts)
    else:
        try:
            mask = np.asarray(membership(pts), dtype=bool)
            if mask.shape != pts.shape:
                raise TypeError
        except (TypeError, ValueError):
            mask = np.array([bool(membership(float(s))) for s in pts])
    return run_length(mask, grid.step)
