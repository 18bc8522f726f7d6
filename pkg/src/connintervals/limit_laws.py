"""Samplers for the dense, sparse and critical limit laws of the
connection-interval length, through their finite-range versions.

One replica consists of a moving typical node in a fresh dynamic ensemble and
a stream of independent ensembles, each observed from a static origin. The
typical node is connected at grid time s when it percolates beyond its side-L
box, and one of the first N static origins does the same in its own
ensemble. All randomness of replica ``i`` (including static copy ``j``) is
seeded by ``(seed, stream, i, j)``, so increasing N only adds copies and
never changes existing ones.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import stats

from .geometry import Window, ball_count, sample_ppp, unit_ball_volume
from .intervals import TimeGrid, run_length
from .mobility import WaypointLaw, sample_brownian_path, simulate_ensemble, simulate_trace
from .replicas import STREAMS, RunningMoments, replica_map, rng_for
from .timeline import box_membership_series


class Regime(str, Enum):
    DENSE = "dense"
    SPARSE = "sparse"
    CRITICAL = "critical"


@dataclass(frozen=True)
class LimitConfig:
    """Finite-range limit setting. Lengths are in units of the radius ``r``.

    ``wrap_margin`` pads the simulation torus around the side-L box; nodes
    further than ``L/2 + r`` from the query never matter, the margin only
    keeps wrapped-around nodes from touching the box.
    """

    regime: Regime = Regime.DENSE
    n_S: float = 2.0
    L: float = 50.0
    delta: float = 0.5
    M: float = 50.0
    node_intensity: float = 1.5
    radius: float = 1.0
    law: WaypointLaw = field(default_factory=lambda: WaypointLaw.fixed(0.05))
    rate: float = 1.0
    replicas: int = 1000
    seed: int = 0
    dim: int = 2
    wrap_margin: float = 2.0
    critical_steps: int = 200

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.n_S >= 0:
            raise ValueError("n_S must be nonnegative")
        if not (self.L > 0 and self.delta > 0 and self.M > 0):
            raise ValueError("L, delta and M must be positive")
        if self.delta > self.M:
            raise ValueError("delta must not exceed M")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(0.0, self.delta, self.M)

    @property
    def window(self) -> Window:
        side = self.L + 2 * self.radius + 2 * self.wrap_margin * self.radius
        return Window(self.dim, side, "periodic")

    @property
    def max_length(self) -> float:
        return self.grid.span


@dataclass(frozen=True)
class LimitSample:
    """One draw: run length at 0, whether time 0 itself is connected, and the
    number N of static copies used."""

    ell: float
    connected: bool
    N: int


def _membership(cfg: LimitConfig, rng, moving: bool) -> np.ndarray:
    grid = cfg.grid
    times = grid.points
    w = cfg.window
    center = np.full(cfg.dim, w.side / 2)
    if cfg.node_intensity == 0:
        return np.zeros(times.size, dtype=bool)
    horizon = (times[0], times[-1])
    if cfg.rate > 0:
        ens = simulate_ensemble(cfg.node_intensity, w, horizon, cfg.rate, cfg.law, rng,
                                anchor_time=0.0)
    else:
        ens = _frozen_ensemble(cfg, w, horizon, rng)
    if moving and cfg.rate > 0:
        path = simulate_trace(center, horizon, cfg.rate, cfg.law, rng,
                              anchor_time=0.0).positions_at(times)
    else:
        path = np.broadcast_to(center, (times.size, cfg.dim))
    return box_membership_series(ens, times, path[None], cfg.L, cfg.radius)[0]


def _frozen_ensemble(cfg, w, horizon, rng):
    from .mobility import MobileEnsemble

    ps = sample_ppp(cfg.node_intensity, w, rng)
    z = np.empty(0)
    return MobileEnsemble(w, cfg.node_intensity, 0.0, cfg.law, horizon, ps.points, z,
                          np.empty(0, dtype=np.int64), np.empty((0, cfg.dim)))


def sample_xi_typical(cfg: LimitConfig, replica: int = 0) -> np.ndarray:
    """Grid indicator of the moving typical node percolating beyond its box."""
    return _membership(cfg, rng_for(cfg.seed, STREAMS["typical"], replica), moving=True)


def sample_xi_static(cfg: LimitConfig, replica: int = 0, j: int = 0) -> np.ndarray:
    """Grid indicator of a static origin percolating beyond its box in the
    j-th independent ensemble of the given replica."""
    return _membership(cfg, rng_for(cfg.seed, STREAMS["static"], replica, j), moving=False)


def coupled_count(cfg: LimitConfig, replica: int, n_S: float | None = None) -> int:
    """N ~ Poisson(n_S) by inversion of one shared uniform per replica, so N is
    nondecreasing in n_S for a fixed replica."""
    lam = cfg.n_S if n_S is None else n_S
    if lam == 0:
        return 0
    u = rng_for(cfg.seed, STREAMS["limit_n"], replica).random()
    return int(stats.poisson.ppf(u, lam))


class _Copies:
    """Lazily sampled static copies of one replica with a running union."""

    def __init__(self, cfg: LimitConfig, replica: int):
        self.cfg = cfg
        self.replica = replica
        self.union = np.zeros(len(cfg.grid), dtype=bool)
        self.count = 0

    def upto(self, n: int) -> np.ndarray:
        while self.count < n:
            if not self.union.all():
                self.union |= sample_xi_static(self.cfg, self.replica, self.count)
            self.count += 1
        return self.union


def _sample_from(typ: np.ndarray, union: np.ndarray, cfg: LimitConfig, n: int) -> LimitSample:
    mask = typ & union
    return LimitSample(run_length(mask, cfg.delta), bool(mask[mask.size // 2]), int(n))


def draw_I_o(cfg: LimitConfig, replica: int = 0, N: int | None = None) -> LimitSample:
    """One draw of the finite-range interval length with N static copies
    (N ~ Poisson(n_S) through :func:`coupled_count` unless given)."""
    if cfg.regime is Regime.CRITICAL and N is None:
        raise ValueError("draw_I_o samples the dense/sparse objects; pass N explicitly")
    n = coupled_count(cfg, replica) if N is None else int(N)
    if n == 0:
        return LimitSample(0.0, False, 0)
    typ = sample_xi_typical(cfg, replica)
    if not typ.any():
        return LimitSample(0.0, False, n)
    return _sample_from(typ, _Copies(cfg, replica).upto(n), cfg, n)


def draws_for_counts(cfg: LimitConfig, replica: int, counts) -> list:
    """Coupled draws of one replica for several N values (shared copies)."""
    counts = [int(c) for c in counts]
    if not counts:
        return []
    typ = sample_xi_typical(cfg, replica)
    copies = _Copies(cfg, replica)
    out = {}
    for n in sorted(set(counts)):
        if n == 0 or not typ.any():
            out[n] = LimitSample(0.0, False, n)
        else:
            out[n] = _sample_from(typ, copies.upto(n), cfg, n)
    return [out[n] for n in counts]


# ------------------------------------------------------- refinement coupling


def _refined(cfg: LimitConfig) -> LimitConfig:
    return replace(cfg, delta=cfg.delta / 2, M=2 * cfg.M, L=2 * cfg.L)


def _membership_pair(cfg: LimitConfig, rng, moving: bool):
    """Masks for (delta, M, L) and (delta/2, 2M, 2L) from one simulation."""
    fine = _refined(cfg)
    ft = fine.grid.points
    m_f, m_c = fine.grid.m, cfg.grid.m
    sub = m_f + 2 * np.arange(-m_c, m_c + 1)
    w = fine.window
    center = np.full(cfg.dim, w.side / 2)
    if cfg.node_intensity == 0:
        return np.zeros(sub.size, dtype=bool), np.zeros(ft.size, dtype=bool)
    horizon = (ft[0], ft[-1])
    ens = simulate_ensemble(cfg.node_intensity, w, horizon, cfg.rate, cfg.law, rng,
                            anchor_time=0.0)
    if moving:
        path = simulate_trace(center, horizon, cfg.rate, cfg.law, rng,
                              anchor_time=0.0).positions_at(ft)
    else:
        path = np.broadcast_to(center, (ft.size, cfg.dim))
    coarse = box_membership_series(ens, ft[sub], path[sub][None], cfg.L, cfg.radius)[0]
    refined = box_membership_series(ens, ft, path[None], fine.L, cfg.radius)[0]
    return coarse, refined


def refinement_pair(cfg: LimitConfig, replica: int = 0):
    """Coupled draws at (delta, M, L) and (delta/2, 2M, 2L).

    Both levels read the same ensembles, typical path and N; the coarse grid
    is a subset of the fine one. Seeds come from their own streams, so these
    draws are independent of :func:`draw_I_o`.
    """
    n = coupled_count(cfg, replica)
    if n == 0:
        return LimitSample(0.0, False, 0), LimitSample(0.0, False, 0)
    typ_c, typ_f = _membership_pair(cfg, rng_for(cfg.seed, STREAMS["refine"], replica), True)
    uc = np.zeros_like(typ_c)
    uf = np.zeros_like(typ_f)
    for j in range(n):
        if uc.all() and uf.all():
            break
        c, f = _membership_pair(cfg, rng_for(cfg.seed, STREAMS["refine"], replica, j + 1), False)
        uc |= c
        uf |= f
    fine = _refined(cfg)
    return _sample_from(typ_c, uc, cfg, n), _sample_from(typ_f, uf, fine, n)


@dataclass(frozen=True)
class _RefineJob:
    cfg: LimitConfig

    def __call__(self, replica: int):
        a, b = refinement_pair(self.cfg, replica)
        return a.ell, b.ell


def refinement_samples(cfg: LimitConfig, workers: int | None = None):
    """Arrays of coupled ell values at the base and the refined setting."""
    vals = np.asarray(replica_map(_RefineJob(cfg), range(cfg.replicas), workers), dtype=float)
    return vals[:, 0], vals[:, 1]


# ----------------------------------------------------------------- statistics


def statistic_value(f, s: LimitSample) -> float:
    """'f1' is the connection indicator at 0, 'f2' the length, 'f3' the
    reciprocal length (0 when unconnected); callables receive ``ell``."""
    if f == "f1":
        return 1.0 if s.connected else 0.0
    if f == "f2":
        return s.ell
    if f == "f3":
        return 1.0 / s.ell if s.ell > 0 else 0.0
    if callable(f):
        v = float(f(s.ell))
        if not math.isfinite(v):
            raise ValueError("statistic must be bounded")
        return v
    raise ValueError(f"unknown statistic {f!r}")


@dataclass(frozen=True)
class RegimeEstimate:
    value: float
    std_error: float
    replicas: int


@dataclass(frozen=True)
class ConditionalTable:
    """n -> E[f | N = n] with Poisson(n_S) weights (renormalised over the
    truncated range) and the mixture over n."""

    n: np.ndarray
    conditional_mean: np.ndarray
    std_error: np.ndarray
    poisson_weight: np.ndarray
    mixture: RegimeEstimate

    def lookup(self, count: int) -> float:
        return float(self.conditional_mean[int(count)])


@dataclass(frozen=True)
class CriticalEstimate:
    samples: np.ndarray
    mean: float
    std_error: float
    table: ConditionalTable
    counts: np.ndarray = field(repr=False)


def poisson_cutoff(n_S: float, tail: float = 1e-4) -> int:
    """Smallest n with P(Poisson(n_S) > n) < tail."""
    if n_S == 0:
        return 0
    n = 0
    while stats.poisson.sf(n, n_S) >= tail:
        n += 1
    return n


@dataclass(frozen=True)
class _TableJob:
    cfg: LimitConfig
    counts: tuple
    stats_: tuple

    def __call__(self, replica: int):
        draws = draws_for_counts(self.cfg, replica, self.counts)
        return [[statistic_value(f, s) for s in draws] for f in self.stats_]


def conditional_table(cfg: LimitConfig, f, n_max: int | None = None,
                      workers: int | None = None) -> ConditionalTable:
    """Conditional means E[f(I_o(n))] for n = 0..n_max over ``cfg.replicas``
    coupled replicas (replica i shares its typical node and copies across n)."""
    n_max = poisson_cutoff(cfg.n_S) if n_max is None else int(n_max)
    counts = tuple(range(n_max + 1))
    vals = np.asarray(replica_map(_TableJob(cfg, counts, (f,)), range(cfg.replicas), workers))
    vals = vals[:, 0, :]
    means = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(cfg.replicas) if cfg.replicas > 1 else np.zeros_like(means)
    w = stats.poisson.pmf(np.arange(n_max + 1), cfg.n_S) if cfg.n_S > 0 else np.eye(1, n_max + 1)[0]
    w = w / w.sum()
    per_rep = vals @ w
    mix = RegimeEstimate(float(per_rep.mean()),
                         float(per_rep.std(ddof=1) / math.sqrt(cfg.replicas)) if cfg.replicas > 1 else 0.0,
                         cfg.replicas)
    return ConditionalTable(np.arange(n_max + 1), means, se, w, mix)


@dataclass(frozen=True)
class _DenseJob:
    cfg: LimitConfig
    stats_: tuple

    def __call__(self, replica: int):
        s = draw_I_o(self.cfg, replica)
        return [statistic_value(f, s) for f in self.stats_]


def dense_estimate(cfg: LimitConfig, f, workers: int | None = None) -> RegimeEstimate:
    vals = np.asarray(replica_map(_DenseJob(cfg, (f,)), range(cfg.replicas), workers))[:, 0]
    acc = RunningMoments().extend(vals)
    return RegimeEstimate(acc.mean, acc.std_error, acc.n)


def critical_radius(n_S: float, d: int = 2) -> float:
    """Radius of a ball holding n_S unit-intensity points on average."""
    return (n_S / unit_ball_volume(d)) ** (1 / d)


def critical_counts(n_S: float, steps: int, seed: int, replica: int, d: int = 2) -> np.ndarray:
    """Unit-intensity Poisson counts in the ball of radius n_S' around a
    Brownian path, on the grid t = k / steps, k = 0..steps."""
    rng = rng_for(seed, STREAMS["critical"], replica)
    grid = np.linspace(0.0, 1.0, steps + 1)
    path = sample_brownian_path(grid, rng, d)
    rad = critical_radius(n_S, d)
    if rad == 0:
        return np.zeros(grid.size, dtype=np.int64)
    lo = path.min(axis=0) - rad - 1.0
    hi = path.max(axis=0) + rad + 1.0
    side = float(np.max(hi - lo))
    ps = sample_ppp(1.0, Window(d, side, "open"), rng)
    return np.asarray([ball_count(ps, x - lo, rad) for x in path], dtype=np.int64)


def _as_weight(h, grid: np.ndarray) -> np.ndarray:
    if h is None:
        return np.ones_like(grid)
    if callable(h):
        return np.asarray([float(h(t)) for t in grid])
    tab = np.asarray(h, dtype=float)
    if tab.ndim == 2:
        return np.interp(grid, tab[:, 0], tab[:, 1])
    if tab.size != grid.size:
        raise ValueError("tabulated h must match the time grid or be (t, h) pairs")
    return tab


def critical_estimate(cfg: LimitConfig, f, h=None, workers: int | None = None) -> CriticalEstimate:
    """Distribution of the time integral of S''(sink count along the path)
    against h (trapezoid rule on ``cfg.critical_steps`` steps)."""
    grid = np.linspace(0.0, 1.0, cfg.critical_steps + 1)
    hw = _as_weight(h, grid)
    counts = np.asarray([critical_counts(cfg.n_S, cfg.critical_steps, cfg.seed, i, cfg.dim)
                         for i in range(cfg.replicas)])
    table_cfg = replace(cfg, regime=Regime.DENSE, seed=cfg.seed + 1)
    n_max = max(poisson_cutoff(cfg.n_S), int(counts.max(initial=0)))
    table = conditional_table(table_cfg, f, n_max=n_max, workers=workers)
    vals = table.conditional_mean[counts] * hw
    samples = np.trapezoid(vals, grid, axis=1) if hasattr(np, "trapezoid") else np.trapz(vals, grid, axis=1)
    se = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
    return CriticalEstimate(samples, float(samples.mean()), se, table, counts)


def estimate_regime_statistic(cfg: LimitConfig, f, h=None, workers: int | None = None):
    """Dense: scalar mean with SE. Sparse: conditional table over n with its
    Poisson mixture. Critical: sample of path integrals of S''."""
    if cfg.regime is Regime.DENSE:
        return dense_estimate(cfg, f, workers)
    if h is not None:
        raise ValueError("a time weight h only applies to the critical regime")
    if cfg.regime is Regime.SPARSE:
        return conditional_table(cfg, f, workers=workers)
    return critical_estimate(cfg, f, h, workers)


# ------------------------------------------------------------------ n_S sweep

SWEEP_COLUMNS = ("n_S", "statistic", "mean", "std_error", "replicas")
TABLE_COLUMNS = ("n", "conditional_mean", "poisson_weight")


@dataclass(frozen=True)
class _SweepJob:
    cfg: LimitConfig
    grid: tuple
    stats_: tuple

    def __call__(self, replica: int):
        counts = [coupled_count(self.cfg, replica, n) for n in self.grid]
        draws = draws_for_counts(self.cfg, replica, counts)
        return [[statistic_value(f, s) for f in self.stats_] for s in draws]


def figure2_sweep(cfg: LimitConfig, n_S_grid, statistics=("f1", "f2", "f3"),
                  workers: int | None = None) -> list:
    """Dense-regime means over an n_S grid, coupled across n_S within each
    replica. Rows: (n_S, statistic, mean, std_error, replicas)."""
    grid = tuple(float(x) for x in n_S_grid)
    if any(x < 0 for x in grid):
        raise ValueError("n_S values must be nonnegative")
    vals = np.asarray(replica_map(_SweepJob(cfg, grid, tuple(statistics)),
                                  range(cfg.replicas), workers), dtype=float)
    rows = []
    for a, n_S in enumerate(grid):
        for b, f in enumerate(statistics):
            acc = RunningMoments().extend(vals[:, a, b])
            rows.append((n_S, f, acc.mean, acc.std_error, acc.n))
    return rows


def write_rows(path, columns, rows, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def table_rows(table: ConditionalTable):
    return [(int(n), float(m), float(w)) for n, m, w in
            zip(table.n, table.conditional_mean, table.poisson_weight)]


__all__ = [
    "Regime", "LimitConfig", "LimitSample", "sample_xi_typical", "sample_xi_static",
    "draw_I_o", "estimate_regime_statistic", "figure2_sweep", "coupled_count",
    "conditional_table", "critical_estimate", "critical_counts", "critical_radius",
    "statistic_value",
]
