"""Connectivity sets over a finite horizon and the connection-interval measure.

Node positions are piecewise constant in time, so every connectivity
indicator only changes at jump times. The event-driven routines evaluate the
graph search right after each jump and glue the constant pieces into an
:class:`IntervalSet`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
import numpy as np

from . import _kernels as K
from .geometry import PointSet, Window, sample_ppp, unit_ball_volume
from .intervals import IntervalSet, TimeGrid, run_length, total_length, truncate
from .mobility import MobileEnsemble, NodeTrace, WaypointLaw, simulate_ensemble, simulate_trace
from .replicas import STREAMS, rng_for


# ------------------------------------------------------------ series kernels


def _kernel_inputs(ens: MobileEnsemble, r: float):
    W = ens.window.side
    ncell = max(1, int(math.floor(W / r)))
    return (np.ascontiguousarray(ens.start), ens.event_times, ens.event_nodes,
            np.ascontiguousarray(ens.event_disp), W, ncell,
            K.neighbor_offsets(ens.window.dim))


def box_membership_series(ens: MobileEnsemble, eval_times, queries, L: float,
                          r: float) -> np.ndarray:
    """Finite-box percolation of query points at the given times.

    ``queries`` has shape (Q, G, d): the position of query q at time g, in
    torus coordinates. Returns a (Q, G) boolean array.
    """
    eval_times = np.asarray(eval_times, dtype=float)
    queries = np.asarray(queries, dtype=float).reshape(-1, eval_times.size, ens.window.dim)
    if L + 2 * r > ens.window.side:
        raise ValueError(f"torus side {ens.window.side} too small for box side {L}")
    if len(ens) == 0:
        return np.zeros(queries.shape[:2], dtype=bool)
    start, et, en, ed, W, ncell, offs = _kernel_inputs(ens, r)
    return K.box_membership(start, et, en, ed, eval_times,
                            np.ascontiguousarray(ens.window.wrap(queries)),
                            L / 2.0, r, W, ncell, offs)


def khop_membership_series(ens: MobileEnsemble, eval_times, source, sinks, k: int,
                           r: float, incremental: bool = True) -> np.ndarray:
    """k-hop connection of the moving source to any sink at each time."""
    eval_times = np.asarray(eval_times, dtype=float)
    d = ens.window.dim
    sinks = np.asarray(sinks, dtype=float).reshape(-1, d)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if sinks.shape[0] == 0:
        return np.zeros(eval_times.size, dtype=bool)
    start, et, en, ed, W, ncell, offs = _kernel_inputs(ens, r)
    if len(ens) == 0:
        start = np.zeros((0, d))
    src = np.ascontiguousarray(ens.window.wrap(np.asarray(source, dtype=float).reshape(-1, d)))
    return K.khop_membership(start, et, en, ed, eval_times, src,
                             np.ascontiguousarray(ens.window.wrap(sinks)), int(k), r, W,
                             ncell, offs, bool(incremental))


# -------------------------------------------------------------------- config


@dataclass(frozen=True)
class ConnectivityConfig:
    """Parameters of a finite-horizon run (lengths in radius units unless
    ``radius`` says otherwise).

    Setting ``L`` switches from exact k-hop connectivity to the finite-box
    percolation surrogate; k then only fixes the relevant-sink reach k / mu.
    ``time_step = None`` means exact event-driven evaluation; a positive
    value evaluates on a fixed grid instead.
    """

    k: int | None = 10
    L: float | None = None
    node_intensity: float = 1.5
    radius: float = 1.0
    sink_intensity: float = 0.05
    T: float = 100.0
    time_step: float | None = None
    rate: float = 1.0
    law: WaypointLaw = field(default_factory=lambda: WaypointLaw.fixed(0.05))
    window_side: float = 20.0
    dim: int = 2
    mu: float | None = None
    incremental: bool = True

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.L is not None and not self.L > 0:
            raise ValueError("L must be positive")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.time_step is not None and not self.time_step > 0:
            raise ValueError("time_step must be positive")

    @property
    def window(self) -> Window:
        return Window(self.dim, self.window_side, "periodic")


def _eval_times(ens: MobileEnsemble, typical: NodeTrace, t_lo: float, t_hi: float,
                step: float | None) -> np.ndarray:
    if step is not None:
        n = int(math.floor((t_hi - t_lo) / step + 1e-9))
        return t_lo + step * np.arange(n + 1)
    ev = ens.event_times[(ens.event_times > t_lo) & (ens.event_times <= t_hi)]
    tj = typical.jump_times[(typical.jump_times > t_lo) & (typical.jump_times <= t_hi)]
    return np.unique(np.concatenate([[t_lo], ev, tj]))


def _horizon(ens: MobileEnsemble, typical: NodeTrace):
    lo = max(ens.horizon[0], typical.horizon[0])
    hi = min(ens.horizon[1], typical.horizon[1])
    if hi <= lo:
        raise ValueError("empty horizon")
    return lo, hi


def compute_xi_k(ensemble: MobileEnsemble, typical: NodeTrace, sinks: PointSet,
                 cfg: ConnectivityConfig) -> IntervalSet:
    """Times at which the typical node reaches some sink in at most k hops.

    The set is computed on the common horizon of ensemble and typical trace;
    sinks are pure endpoints.
    """
    if cfg.k is None:
        raise ValueError("compute_xi_k needs a finite hop budget k")
    lo, hi = _horizon(ensemble, typical)
    if len(sinks) == 0:
        return IntervalSet()
    times = _eval_times(ensemble, typical, lo, hi, cfg.time_step)
    src = typical.positions_at(times)
    mask = khop_membership_series(ensemble, times, src, sinks.points, cfg.k, cfg.radius,
                                  cfg.incremental)
    return IntervalSet.from_mask(times, mask, hi)


@dataclass(frozen=True)
class RelevantSinks:
    """Sinks within ``reach = k / mu`` of the typical node at ``time``."""

    indices: np.ndarray
    points: np.ndarray
    reach: float
    time: float

    def __len__(self) -> int:
        return self.indices.size


def relevant_sinks(sinks: PointSet, typical: NodeTrace, t: float, k: int,
                   mu: float) -> RelevantSinks:
    if not mu > 0:
        raise ValueError("stretch factor must be positive")
    reach = k / mu
    x = typical.positions_at([t])[0]
    if len(sinks) == 0:
        return RelevantSinks(np.empty(0, dtype=np.int64), np.empty((0, sinks.dim)), reach, t)
    dist = sinks.window.distance(x, sinks.points)
    idx = np.nonzero(dist <= reach)[0]
    return RelevantSinks(idx, sinks.points[idx], reach, t)


def compute_xi_L(typical: NodeTrace, sinks: RelevantSinks, ensemble: MobileEnsemble,
                 cfg: ConnectivityConfig) -> IntervalSet:
    """Times at which the typical node and at least one relevant sink both
    percolate beyond their side-L boxes."""
    if cfg.L is None:
        raise ValueError("compute_xi_L needs the box side L")
    lo, hi = _horizon(ensemble, typical)
    if len(sinks) == 0 or len(ensemble) == 0:
        return IntervalSet()
    times = _eval_times(ensemble, typical, lo, hi, cfg.time_step)
    d = ensemble.window.dim
    q = np.empty((1 + len(sinks), times.size, d))
    q[0] = typical.positions_at(times)
    q[1:] = sinks.points[:, None, :]
    mem = box_membership_series(ensemble, times, q, cfg.L, cfg.radius)
    mask = mem[0] & mem[1:].any(axis=0)
    return IntervalSet.from_mask(times, mask, hi)


# ------------------------------------------------------------------- measure


@dataclass(frozen=True)
class IntervalMeasure:
    """Piecewise form of the connection-interval measure on [0, T].

    One row per component of the connection set met by [0, T]: the full
    component length ``ell``, the clipped time range and its weight
    (clipped length / T).
    """

    ell: np.ndarray
    t_start: np.ndarray
    t_end: np.ndarray
    weight: np.ndarray
    T: float

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    def __len__(self) -> int:
        return self.ell.size

    def samples(self, quadrature_step: float):
        """Midpoint-rule point masses ``(ell, s / T, weight)``."""
        if not quadrature_step > 0:
            raise ValueError("quadrature_step must be positive")
        out = []
        for ell, a, b in zip(self.ell, self.t_start * self.T, self.t_end * self.T):
            n = max(1, int(math.ceil((b - a) / quadrature_step)))
            h = (b - a) / n
            for i in range(n):
                out.append((float(ell), (a + (i + 0.5) * h) / self.T, h / self.T))
        return out


def build_measure(xi: IntervalSet, T: float, quadrature_step: float | None = None) -> IntervalMeasure:
    """Exact piecewise connection-interval measure of ``xi`` on [0, T].

    Components reaching outside [0, T] keep their full length as ``ell``
    while only the part inside [0, T] carries weight. ``quadrature_step`` is
    only checked here; it matters for :meth:`IntervalMeasure.samples`.
    """
    if quadrature_step is not None and not quadrature_step > 0:
        raise ValueError("quadrature_step must be positive")
    if not T > 0:
        raise ValueError("T must be positive")
    rows = []
    for a, b in xi:
        lo, hi = max(a, 0.0), min(b, T)
        if lo > hi or (hi == lo and b > a):
            continue
        rows.append((b - a, lo / T, hi / T, (hi - lo) / T))
    if not rows:
        z = np.empty(0)
        return IntervalMeasure(z, z, z, z, float(T))
    arr = np.asarray(rows, dtype=float)
    return IntervalMeasure(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], float(T))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def evaluate_statistic(m: IntervalMeasure, f, truncation: float | None = None) -> float:
    """tau_T(f) for ``f`` in {'f1', 'f2', 'f3'} or a bounded callable f(ell, t).

    ``truncation`` caps |f| at the given level. Custom callables are
    integrated in t by 16-point Gauss-Legendre per component.
    """
    if len(m) == 0:
        return 0.0
    if isinstance(f, str):
        if f == "f1":
            vals = np.ones_like(m.ell)
        elif f == "f2":
            vals = m.ell.copy()
        elif f == "f3":
            vals = np.where(m.ell > 0, 1.0 / np.where(m.ell > 0, m.ell, 1.0), 0.0)
        else:
            raise ValueError(f"unknown statistic {f!r}")
        if truncation is not None:
            vals = np.clip(vals, -truncation, truncation)
        return float(np.sum(vals * m.weight))
    if not callable(f):
        raise TypeError("statistic must be 'f1', 'f2', 'f3' or a callable")
    total = 0.0
    for ell, a, b, w in zip(m.ell, m.t_start, m.t_end, m.weight):
        if w == 0:
            continue
        ts = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
        vals = np.asarray([f(float(ell), float(t)) for t in ts], dtype=float)
        if truncation is not None:
            vals = np.clip(vals, -truncation, truncation)
        if not np.all(np.isfinite(vals)):
            raise ValueError("statistic is unbounded on the sample; pass a truncation level")
        total += w * 0.5 * float(np.sum(_GL_W * vals))
    return total


MEASURE_COLUMNS = ("replica", "component_start", "component_end", "ell", "weight")


def measure_rows(m: IntervalMeasure, replica: int):
    for ell, a, b, w in zip(m.ell, m.t_start * m.T, m.t_end * m.T, m.weight):
        yield (replica, float(a), float(b), float(ell), float(w))


def write_measures_csv(path, measures, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(MEASURE_COLUMNS)
        for rep, m in enumerate(measures):
            for row in measure_rows(m, rep):
                w.writerow([row[0]] + [repr(v) for v in row[1:]])


def read_measures_csv(path) -> dict:
    """Inverse of :func:`write_measures_csv`: {replica: IntervalMeasure}.

    The horizon is read from a ``# T=<value>`` header line when present.
    """
    rows = {}
    T = None
    data = []
    with open(path) as fh:
        for ln in fh:
            if ln.startswith("#"):
                key, _, val = ln[1:].strip().partition("=")
                if key.strip() == "T":
                    T = float(val)
            else:
                data.append(ln)
    for rec in csv.DictReader(data):
        rows.setdefault(int(rec["replica"]), []).append(
            tuple(float(rec[c]) for c in MEASURE_COLUMNS[1:]))
    out = {}
    for rep, rr in rows.items():
        arr = np.asarray(rr)
        horizon = T if T is not None else float(np.max(arr[:, 1]))
        out[rep] = IntervalMeasure(arr[:, 2], arr[:, 0] / horizon, arr[:, 1] / horizon,
                                   arr[:, 3], horizon)
    return out


# ------------------------------------------------------------ finite-T runs


def simulate_interval_measure(cfg: ConnectivityConfig, seed: int, replica: int = 0):
    """One replica: nodes, sinks and typical node on the torus, the
    connection set on [0, T] and its measure.

    With ``cfg.L`` set the finite-box surrogate is used against the sinks
    within k / mu of the typical node at time 0; otherwise the exact k-hop
    set against all sinks.
    """
    rng = rng_for(seed, STREAMS["timeline"], replica)
    w = cfg.window
    ens = simulate_ensemble(cfg.node_intensity, w, (0.0, cfg.T), cfg.rate, cfg.law, rng,
                            anchor_time=0.0)
    sinks = sample_ppp(cfg.sink_intensity, w, rng)
    center = np.full(w.dim, w.side / 2)
    typical = simulate_trace(center, (0.0, cfg.T), cfg.rate, cfg.law, rng)
    if cfg.L is None:
        xi = compute_xi_k(ens, typical, sinks, cfg)
    else:
        if cfg.mu is None or cfg.k is None:
            raise ValueError("the finite-box surrogate needs k and mu to select relevant sinks")
        xi = compute_xi_L(typical, relevant_sinks(sinks, typical, 0.0, cfg.k, cfg.mu), ens, cfg)
    return xi, build_measure(xi, cfg.T)


# --------------------------------------------------------- decorrelation


@dataclass(frozen=True)
class DecorrelationConfig:
    """Finite-T setting for the covariance of g(I_{k,L,delta,M}) at 0 and tT.

    Sink intensity and hop budget follow the multi-scale relations
    lambda_S = T^-alpha and lambda_S (k/mu)^d |B_1| = n_S.
    """

    T: float = 100.0
    alpha: float = 0.25
    n_S: float = 2.0
    mu: float = 2.9
    L: float = 10.0
    delta: float = 0.5
    M: float = 10.0
    node_intensity: float = 1.5
    radius: float = 1.0
    rate: float = 1.0
    law: WaypointLaw = field(default_factory=lambda: WaypointLaw.fixed(0.05))
    dim: int = 2
    margin: float = 2.0

    @property
    def sink_intensity(self) -> float:
        return self.T ** (-self.alpha)

    @property
    def reach(self) -> float:
        """k / mu from the scaling identity (before rounding k)."""
        return (self.n_S / (self.sink_intensity * unit_ball_volume(self.dim))) ** (1 / self.dim)


@dataclass(frozen=True)
class CovarianceEstimate:
    value: float
    std_error: float
    replicas: int


def covariance_with_error(a, b) -> CovarianceEstimate:
    """Sample covariance and its standard error (from the centred products)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    if n < 3 or b.size != n:
        raise ValueError("need two equal-length samples of size >= 3")
    prod = (a - a.mean()) * (b - b.mean())
    cov = prod.sum() / (n - 1)
    return CovarianceEstimate(float(cov), float(prod.std(ddof=1) / math.sqrt(n)), n)


def _window_masks(cfg: DecorrelationConfig, rng, t_second: float):
    """g-values of the finite-range interval at times 0 and ``t_second``."""
    d = cfg.dim
    r = cfg.radius
    grid0 = TimeGrid(0.0, cfg.delta, cfg.M)
    ext = grid0.m * cfg.delta
    typical = simulate_trace(np.zeros(d), (-ext, t_second + ext), cfg.rate, cfg.law, rng,
                             anchor_time=0.0)
    g0 = grid0.points
    g1 = t_second + g0
    path0 = typical.positions_at(g0)
    path1 = typical.positions_at(g1)
    reach = cfg.reach
    allpath = np.vstack([path0, path1])
    radius_needed = np.max(np.abs(allpath)) + reach + cfg.L / 2 + 2 * r
    side = 2 * radius_needed + 2 * cfg.margin
    w = Window(d, side, "periodic")
    shift = np.full(d, side / 2)
    sinks = sample_ppp(cfg.sink_intensity, w, rng)
    x0 = shift + path0[grid0.m]
    x1 = shift + path1[grid0.m]
    if len(sinks):
        rel0 = sinks.points[w.distance(x0, sinks.points) <= reach]
        rel1 = sinks.points[w.distance(x1, sinks.points) <= reach]
    else:
        rel0 = rel1 = np.empty((0, d))
    G = g0.size
    if t_second <= 2 * ext:
        ens = simulate_ensemble(cfg.node_intensity, w, (-ext, t_second + ext), cfg.rate,
                                cfg.law, rng, anchor_time=0.0)
        times = np.concatenate([g0, g1])
        order = np.argsort(times, kind="stable")
        q = np.empty((1 + len(rel0) + len(rel1), 2 * G, d))
        q[0] = shift + np.vstack([path0, path1])
        q[1:1 + len(rel0)] = rel0[:, None, :]
        q[1 + len(rel0):] = rel1[:, None, :]
        mem = np.empty((q.shape[0], 2 * G), dtype=bool)
        mem[:, order] = box_membership_series(ens, times[order], q[:, order], cfg.L, r)
        m0 = mem[0, :G] & (mem[1:1 + len(rel0), :G].any(axis=0) if len(rel0) else False)
        m1 = mem[0, G:] & (mem[1 + len(rel0):, G:].any(axis=0) if len(rel1) else False)
    else:
        ens0 = simulate_ensemble(cfg.node_intensity, w, (-ext, ext), cfg.rate, cfg.law, rng,
                                 anchor_time=0.0)
        gap = (t_second - ext) - ext
        end0 = ens0.positions_at(ext)
        counts = rng.poisson(cfg.rate * gap, len(ens0))
        start1 = w.wrap(end0 + cfg.law.sample_sums(rng, counts, d))
        ens1 = _continue_ensemble(ens0, start1, (t_second - ext, t_second + ext), rng)
        q0 = np.empty((1 + len(rel0), G, d))
        q0[0] = shift + path0
        q0[1:] = rel0[:, None, :]
        q1 = np.empty((1 + len(rel1), G, d))
        q1[0] = shift + path1
        q1[1:] = rel1[:, None, :]
        mem0 = box_membership_series(ens0, g0, q0, cfg.L, r)
        mem1 = box_membership_series(ens1, g1, q1, cfg.L, r)
        m0 = mem0[0] & (mem0[1:].any(axis=0) if len(rel0) else False)
        m1 = mem1[0] & (mem1[1:].any(axis=0) if len(rel1) else False)
    m0 = np.broadcast_to(m0, (G,))
    m1 = np.broadcast_to(m1, (G,))
    ell0 = run_length(m0, cfg.delta)
    ell1 = run_length(m1, cfg.delta)
    return min(ell0, cfg.M) / cfg.M, min(ell1, cfg.M) / cfg.M


def _continue_ensemble(ens: MobileEnsemble, start, horizon, rng) -> MobileEnsemble:
    from .mobility import _poisson_times

    n = len(ens)
    t_lo, t_hi = horizon
    times = _poisson_times(rng, n * ens.rate, t_lo, t_hi)
    nodes = rng.integers(0, n, times.size) if n else np.empty(0, dtype=np.int64)
    disp = ens.law.sample(rng, times.size, ens.window.dim)
    return MobileEnsemble(ens.window, ens.intensity, ens.rate, ens.law, (t_lo, t_hi),
                          start, times, nodes.astype(np.int64), disp)


def decorrelation_samples(cfg: DecorrelationConfig, t_frac: float, replicas: int,
                          seed: int, workers: int | None = None):
    """Arrays (g at time 0, g at time t_frac * T) over replicas, with
    g(ell) = min(ell, M) / M."""
    from .replicas import replica_map

    if not 0 < t_frac < 1:
        raise ValueError("t_frac must lie in (0, 1)")
    fn = _DecorrelationJob(cfg, t_frac * cfg.T, seed)
    vals = replica_map(fn, range(replicas), workers)
    arr = np.asarray(vals, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


@dataclass(frozen=True)
class _DecorrelationJob:
    cfg: DecorrelationConfig
    t_second: float
    seed: int

    def __call__(self, replica: int):
        return _window_masks(self.cfg, rng_for(self.seed, STREAMS["decorrelation"], replica),
                             self.t_second)


def decorrelation_diagnostic(cfg: DecorrelationConfig, t_frac: float, replicas: int,
                             seed: int = 0, workers: int | None = None) -> CovarianceEstimate:
    """Covariance across replicas of g(I) at time 0 and at time t_frac * T."""
    a, b = decorrelation_samples(cfg, t_frac, replicas, seed, workers)
    return covariance_with_error(a, b)


def config_dict(cfg) -> dict:
    out = asdict(cfg)
    if "law" in out:
        out["law"] = f"{cfg.law.kind.value}:{cfg.law.distance}"
    return out


__all__ = [
    "ConnectivityConfig", "IntervalMeasure", "RelevantSinks", "compute_xi_k", "compute_xi_L",
    "build_measure", "evaluate_statistic", "decorrelation_diagnostic", "relevant_sinks",
    "box_membership_series", "khop_membership_series", "truncate", "total_length",
]
