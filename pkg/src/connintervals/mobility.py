"""Exponential-clock random-waypoint jumps and Brownian paths."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import Window, sample_ppp


class LawKind(str, Enum):
    FIXED_JUMP = "fixed_jump"
    ISOTROPIC_NORMALIZED = "isotropic_normalized"


@dataclass(frozen=True)
class WaypointLaw:
    """Isotropic displacement law of a single jump.

    ``fixed_jump`` moves exactly ``distance`` in a uniform direction.
    ``isotropic_normalized`` draws a standard Gaussian vector, so the trace of
    the coordinate covariance is ``d``.
    """

    kind: LawKind = LawKind.FIXED_JUMP
    distance: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if self.kind is LawKind.FIXED_JUMP and not self.distance > 0:
            raise ValueError("fixed_jump needs a positive distance")

    @classmethod
    def fixed(cls, distance: float) -> "WaypointLaw":
        return cls(LawKind.FIXED_JUMP, float(distance))

    @classmethod
    def normalized(cls) -> "WaypointLaw":
        return cls(LawKind.ISOTROPIC_NORMALIZED, 1.0)

    def second_moment(self, d: int) -> float:
        """E|v|^2 of one jump."""
        if self.kind is LawKind.FIXED_JUMP:
            return self.distance ** 2
        return float(d)

    def sample(self, rng: np.random.Generator, size: int, d: int) -> np.ndarray:
        if self.kind is LawKind.ISOTROPIC_NORMALIZED:
            return rng.standard_normal((size, d))
        if d == 1:
            return self.distance * rng.choice([-1.0, 1.0], size=(size, 1))
        if d == 2:
            ang = rng.uniform(0.0, 2 * math.pi, size)
            return self.distance * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        v = rng.standard_normal((size, d))
        return self.distance * v / np.linalg.norm(v, axis=1, keepdims=True)

    def sample_sums(self, rng: np.random.Generator, counts: np.ndarray, d: int,
                    chunk: int = 4_000_000) -> np.ndarray:
        """Sum of ``counts[i]`` independent jumps for every i (exact in law)."""
        counts = np.asarray(counts, dtype=np.int64)
        out = np.zeros((counts.size, d))
        if self.kind is LawKind.ISOTROPIC_NORMALIZED:
            return np.sqrt(counts)[:, None] * rng.standard_normal((counts.size, d))
        start = 0
        while start < counts.size:
            stop = start
            total = 0
            while stop < counts.size and (total + counts[stop] <= chunk or stop == start):
                total += counts[stop]
                stop += 1
            c = counts[start:stop]
            if total:
                jumps = self.sample(rng, int(total), d)
                owner = np.repeat(np.arange(c.size), c)
                for k in range(d):
                    out[start:stop, k] = np.bincount(owner, weights=jumps[:, k],
                                                     minlength=c.size)
            start = stop
        return out


def _poisson_times(rng: np.random.Generator, total_rate: float, t_lo: float,
                   t_hi: float) -> np.ndarray:
    """Sorted points of a homogeneous Poisson process of rate ``total_rate``
    on ``(t_lo, t_hi]``, built from exponential gaps."""
    span = t_hi - t_lo
    if total_rate <= 0 or span <= 0:
        return np.empty(0)
    mean = total_rate * span
    chunks = []
    t = t_lo
    while True:
        m = int(mean + 8 * math.sqrt(mean) + 16)
        gaps = rng.exponential(1.0 / total_rate, m)
        times = t + np.cumsum(gaps)
        if times[-1] > t_hi:
            chunks.append(times[times <= t_hi])
            break
        chunks.append(times)
        t = times[-1]
    return np.concatenate(chunks)


@dataclass(frozen=True)
class NodeTrace:
    """Piecewise-constant path: ``origin`` is the position at ``horizon[0]``
    and the node adds ``displacements[i]`` at ``jump_times[i]``."""

    origin: np.ndarray
    jump_times: np.ndarray
    displacements: np.ndarray
    horizon: tuple

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        if jt.size > 1 and np.any(np.diff(jt) <= 0):
            raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        disp = np.asarray(self.displacements, dtype=float).reshape(jt.size, self.origin.size)
        object.__setattr__(self, "displacements", disp)

    @property
    def dim(self) -> int:
        return self.origin.size

    def positions_at(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        lo, hi = self.horizon
        if np.any(times < lo) or np.any(times > hi):
            raise ValueError(f"times outside horizon [{lo}, {hi}]")
        cum = np.vstack([np.zeros((1, self.dim)), np.cumsum(self.displacements, axis=0)])
        k = np.searchsorted(self.jump_times, times, side="right")
        return self.origin + cum[k]


def position_at(trace: NodeTrace, t: float) -> np.ndarray:
    """Right-continuous position of the node at time t."""
    return trace.positions_at([t])[0]


def simulate_trace(origin, horizon, rate: float, law: WaypointLaw, seed,
                   anchor_time: float | None = None) -> NodeTrace:
    """Jump path on ``horizon = (t_lo, t_hi)`` with exponential(rate) waits.

    The node sits at ``origin`` at ``anchor_time`` (default ``t_lo``). With a
    two-sided horizon and ``anchor_time = 0`` the jumps before and after 0 are
    independent Poisson streams, which matches running the reversible jump
    process backwards from 0.
    """
    if not rate > 0:
        raise ValueError("rate must be positive")
    t_lo, t_hi = float(horizon[0]), float(horizon[1])
    if t_hi < t_lo:
        raise ValueError("empty horizon")
    rng = np.random.default_rng(seed)
    origin = np.atleast_1d(np.asarray(origin, dtype=float))
    d = origin.size
    times = _poisson_times(rng, rate, t_lo, t_hi)
    disp = law.sample(rng, times.size, d)
    if anchor_time is not None:
        if not t_lo <= anchor_time <= t_hi:
            raise ValueError("anchor_time must lie in the horizon")
        origin = origin - disp[times <= anchor_time].sum(axis=0)
    return NodeTrace(origin, times, disp, (t_lo, t_hi))


@dataclass(frozen=True)
class MobileEnsemble:
    """All nodes of a torus window moving independently.

    ``start`` holds positions at ``horizon[0]``; events are stored merged and
    time-sorted (superposition of the per-node Poisson clocks).
    """

    window: Window
    intensity: float
    rate: float
    law: WaypointLaw
    horizon: tuple
    start: np.ndarray = field(repr=False)
    event_times: np.ndarray = field(repr=False)
    event_nodes: np.ndarray = field(repr=False)
    event_disp: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.start.shape[0]

    def positions_at(self, t: float) -> np.ndarray:
        lo, hi = self.horizon
        if not lo <= t <= hi:
            raise ValueError(f"time {t} outside horizon [{lo}, {hi}]")
        k = np.searchsorted(self.event_times, t, side="right")
        pos = self.start.copy()
        for j in range(self.window.dim):
            pos[:, j] += np.bincount(self.event_nodes[:k], weights=self.event_disp[:k, j],
                                     minlength=len(self))
        return self.window.wrap(pos)

    def trace(self, i: int) -> NodeTrace:
        mask = self.event_nodes == i
        return NodeTrace(self.start[i], self.event_times[mask], self.event_disp[mask],
                         self.horizon)


def simulate_ensemble(intensity: float, window: Window, horizon, rate: float,
                      law: WaypointLaw, seed, anchor_time: float = 0.0) -> MobileEnsemble:
    """Poisson nodes at ``anchor_time`` plus their jump streams on the horizon."""
    if not window.periodic:
        raise ValueError("mobile ensembles live on a periodic window")
    if not rate > 0:
        raise ValueError("rate must be positive")
    t_lo, t_hi = float(horizon[0]), float(horizon[1])
    if t_hi < t_lo:
        raise ValueError("empty horizon")
    anchor = min(max(anchor_time, t_lo), t_hi)
    rng = np.random.default_rng(seed)
    ps = sample_ppp(intensity, window, rng)
    n = len(ps)
    d = window.dim
    times = _poisson_times(rng, n * rate, t_lo, t_hi)
    nodes = rng.integers(0, n, times.size) if n else np.empty(0, dtype=np.int64)
    disp = law.sample(rng, times.size, d)
    start = ps.points.copy()
    before = times <= anchor
    for j in range(d):
        start[:, j] -= np.bincount(nodes[before], weights=disp[before, j], minlength=n)
    return MobileEnsemble(window, float(intensity), float(rate), law, (t_lo, t_hi),
                          window.wrap(start), times, nodes.astype(np.int64), disp)


def diffusive_rescale_check(law: WaypointLaw, rate: float, T: float, replicas: int,
                            seed=0, d: int = 2) -> np.ndarray:
    """Empirical covariance matrix of X_0(T) / sqrt(T) over independent paths."""
    if replicas < 2:
        raise ValueError("need at least two replicas")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(rate * T, replicas)
    ends = law.sample_sums(rng, counts, d) / math.sqrt(T)
    return np.atleast_2d(np.cov(ends, rowvar=False))


def sample_brownian_path(grid, seed, d: int = 2) -> np.ndarray:
    """Standard Brownian motion started at the origin at time 0, evaluated on
    a sorted nonnegative time grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be a sorted 1-d sequence")
    if grid.size and grid[0] < 0:
        raise ValueError("grid must start at time >= 0")
    rng = np.random.default_rng(seed)
    dt = np.diff(np.concatenate([[0.0], grid]))
    steps = rng.standard_normal((grid.size, d)) * np.sqrt(dt)[:, None]
    return np.cumsum(steps, axis=0)
