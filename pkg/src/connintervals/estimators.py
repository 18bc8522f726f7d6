"""Percolation constants and the sink-scaling conversions.

* theta_L: chance that a node planted at the centre of a torus percolates
  beyond its side-L box.
* lambda_c: every replica gets i.i.d. uniform marks, so switching nodes on in
  mark order sweeps the intensity continuously; the intensity at which a
  crossing cluster first appears is that replica's spanning threshold. The
  spanning-probability curves of two window sizes are fitted by normal CDFs
  and their crossing is the estimate.
* mu: hops per radius-normalized distance between the points of the largest
  component nearest to two far-apart locations, fitted through the origin.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import Window, close_pairs, sample_ppp, unit_ball_volume
from .graph import build_graph, hop_distance, nearest_cluster_point
from .replicas import STREAMS, replica_map, rng_for


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float
    replicas: int
    settings: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be nonnegative")


# ---------------------------------------------------------------- scaling


@dataclass(frozen=True)
class ScalingParams:
    """Sink intensity lambda_S = T^-alpha and hop budget k with
    lambda_S (k/mu)^d |B_1| = n_S (k rounded to an integer >= 1)."""

    n_S: float
    alpha: float
    T: float
    mu: float
    d: int = 2

    def __post_init__(self):
        for name in ("n_S", "alpha", "T", "mu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def lambda_S(self) -> float:
        return self.T ** (-self.alpha)

    @property
    def exact_reach(self) -> float:
        """k / mu before rounding."""
        return (self.n_S / (self.lambda_S * unit_ball_volume(self.d))) ** (1 / self.d)

    @property
    def k(self) -> int:
        return max(1, int(round(self.mu * self.exact_reach)))

    @property
    def realized_n_S(self) -> float:
        """n_S implied by the rounded k."""
        return self.lambda_S * (self.k / self.mu) ** self.d * unit_ball_volume(self.d)


def resolve_scaling(n_S: float, alpha: float, T: float, mu_hat: float, d: int = 2):
    """(lambda_S, k) for the given expected in-range sink count."""
    p = ScalingParams(n_S, alpha, T, mu_hat, d)
    return p.lambda_S, p.k


def critical_radius(n_S: float, d: int = 2) -> float:
    """Radius n_S' with |B_{n_S'}| = n_S."""
    return (n_S / unit_ball_volume(d)) ** (1 / d)


# ------------------------------------------------------------------ theta


@dataclass(frozen=True)
class _ThetaJob:
    intensity: float
    r: float
    side: float
    L: float
    dim: int
    seed: int

    def __call__(self, replica: int) -> bool:
        rng = rng_for(self.seed, STREAMS["theta"], replica)
        w = Window(self.dim, self.side, "periodic")
        ps = sample_ppp(self.intensity, w, rng)
        if len(ps) == 0:
            return False
        x = np.full((1, 1, self.dim), self.side / 2)
        ncell = max(1, int(self.side // self.r))
        z = np.empty(0)
        out = K.box_membership(np.ascontiguousarray(ps.points), z, np.empty(0, np.int64),
                               np.empty((0, self.dim)), np.zeros(1), x, self.L / 2, self.r,
                               self.side, ncell, K.neighbor_offsets(self.dim))
        return bool(out[0, 0])


def estimate_theta(intensity: float, r: float, window_side: float, L: float,
                   replicas: int, seed: int = 0, dim: int = 2,
                   workers: int | None = None) -> EstimateWithError:
    """Fraction of replicas in which a node planted at the torus centre
    percolates beyond its side-L box."""
    if window_side < 2 * L:
        raise ValueError("window side must be at least 2L")
    if replicas < 2:
        raise ValueError("need at least two replicas")
    job = _ThetaJob(float(intensity), float(r), float(window_side), float(L), dim, seed)
    hits = np.asarray(replica_map(job, range(replicas), workers), dtype=float)
    p = hits.mean()
    return EstimateWithError(float(p), float(math.sqrt(p * (1 - p) / replicas)), replicas,
                             dict(intensity=intensity, r=r, window_side=window_side, L=L))


# --------------------------------------------------------------- lambda_c


@dataclass(frozen=True)
class _SpanJob:
    lam_max: float
    r: float
    side: float
    dim: int
    seed: int
    window_id: int

    def __call__(self, replica: int) -> np.ndarray:
        """Spanning thresholds of one marked sample, one per axis."""
        rng = rng_for(self.seed, STREAMS["lambda_c"], self.window_id, replica)
        w = Window(self.dim, self.side, "open")
        ps = sample_ppp(self.lam_max, w, rng)
        n = len(ps)
        out = np.full(self.dim, np.inf)
        if n == 0:
            return out
        marks = rng.random(n)
        rank = np.empty(n, dtype=np.int64)
        order = np.argsort(marks, kind="stable")
        rank[order] = np.arange(n)
        pairs = close_pairs(ps, self.r)
        a, b = pairs[:, 0], pairs[:, 1]
        later_is_b = rank[b] > rank[a]
        hi = np.where(later_is_b, b, a)
        lo = np.where(later_is_b, a, b)
        o = np.argsort(rank[hi], kind="stable")
        hi, lo = np.ascontiguousarray(hi[o]), np.ascontiguousarray(lo[o])
        for ax in range(self.dim):
            c = ps.points[:, ax]
            step = K.bottleneck_thresholds(rank, lo, hi, c <= self.r, c >= self.side - self.r)
            if step >= 0:
                out[ax] = self.lam_max * marks[order[step]]
        return out


def spanning_thresholds(r: float, side: float, lam_max: float, replicas: int, seed: int = 0,
                        dim: int = 2, workers: int | None = None) -> np.ndarray:
    """Pooled per-axis spanning thresholds (inf when no crossing below
    ``lam_max``) of ``replicas`` open windows of the given side."""
    # keyed on side / r so that rescaling the geometry reuses the same samples
    wid = int(round(side / r * 1e6))
    job = _SpanJob(float(lam_max), float(r), float(side), dim, seed, wid)
    return np.concatenate(replica_map(job, range(replicas), workers))


def spanning_curve(thresholds: np.ndarray, sweep) -> np.ndarray:
    """Empirical spanning probability at each sweep intensity."""
    t = np.sort(np.asarray(thresholds))
    return np.searchsorted(t, np.asarray(sweep, dtype=float), side="right") / t.size


def _normal_fit(th: np.ndarray):
    # probit fit via quantiles is robust to the few inf (never spanning) values
    q25, q50, q75 = np.quantile(th, [0.25, 0.5, 0.75])
    if not np.isfinite(q75):
        raise ValueError("sweep maximum too low: fewer than 75% of replicas span")
    return q50, (q75 - q25) / 1.3489795003921634


def _crossing(th_small: np.ndarray, th_large: np.ndarray) -> float:
    m1, s1 = _normal_fit(th_small)
    m2, s2 = _normal_fit(th_large)
    if abs(s1 - s2) < 1e-9 * max(s1, s2, 1.0):
        return 0.5 * (m1 + m2)
    x = (m2 * s1 - m1 * s2) / (s1 - s2)
    # far outside both bulks the fit is meaningless; fall back to the midpoints
    if not (min(m1, m2) - 3 * max(s1, s2) <= x <= max(m1, m2) + 3 * max(s1, s2)):
        return 0.5 * (m1 + m2)
    return x


@dataclass(frozen=True)
class SpanningPoint:
    side: float
    value: float
    std_error: float


def spanning_point(thresholds: np.ndarray, side: float, boot: int = 200,
                   seed: int = 0) -> SpanningPoint:
    """Intensity at which the spanning probability is 1/2, with bootstrap SE."""
    rng = np.random.default_rng(seed)
    th = np.asarray(thresholds)
    med = float(np.median(th))
    bs = [np.median(rng.choice(th, th.size)) for _ in range(boot)]
    return SpanningPoint(side, med, float(np.std(bs, ddof=1)))


def estimate_lambda_c(r: float, window_sides=(3.0, 5.0), sweep=None, replicas: int = 200,
                      seed: int = 0, dim: int = 2, boot: int = 200,
                      workers: int | None = None) -> EstimateWithError:
    """Crossing of the spanning-probability curves of two window sizes.

    ``sweep`` is the intensity grid; its maximum bounds the marked samples and
    its spacing floors the reported error (half a step). The error is the
    larger of that floor and a bootstrap SE of the crossing.
    """
    if len(window_sides) != 2:
        raise ValueError("need exactly two window sides")
    if sweep is None:
        sweep = np.linspace(0.6, 1.5, 181) * 1.437 / r ** dim
    sweep = np.sort(np.asarray(sweep, dtype=float))
    if sweep.size < 2:
        raise ValueError("sweep needs at least two intensities")
    lam_max = float(sweep[-1])
    ths = [spanning_thresholds(r, s, lam_max, replicas, seed, dim, workers) for s in window_sides]
    value = _crossing(*ths)
    if not sweep[0] <= value <= sweep[-1]:
        raise ValueError(f"crossing {value:.4g} lies outside the sweep; widen it")
    rng = np.random.default_rng(rng_for(seed, STREAMS["lambda_c"], 0).integers(2**63))
    boots = []
    for _ in range(boot):
        rs = [t.reshape(replicas, dim)[rng.integers(0, replicas, replicas)].ravel() for t in ths]
        try:
            boots.append(_crossing(*rs))
        except ValueError:
            continue
    boot_se = float(np.std(boots, ddof=1)) if len(boots) > 1 else math.inf
    half_step = float(np.max(np.diff(sweep))) / 2
    curves = {float(s): spanning_curve(t, sweep) for s, t in zip(window_sides, ths)}
    points = [spanning_point(t, s, boot, seed) for s, t in zip(window_sides, ths)]
    return EstimateWithError(float(value), max(boot_se, half_step), replicas,
                             dict(r=r, window_sides=tuple(window_sides), sweep=sweep,
                                  curves=curves, points=points, bootstrap_se=boot_se))


# --------------------------------------------------------------------- mu


@dataclass(frozen=True)
class _MuJob:
    intensity: float
    r: float
    side: float
    d_lo: float
    d_hi: float
    pairs: int
    dim: int
    seed: int

    def __call__(self, replica: int):
        rng = rng_for(self.seed, STREAMS["mu"], replica)
        w = Window(self.dim, self.side, "periodic")
        for _ in range(100):
            g = build_graph(sample_ppp(self.intensity, w, rng), self.r)
            if len(g):
                break
        else:
            raise RuntimeError("could not draw a nonempty graph")
        D, H = [], []
        for _ in range(self.pairs):
            x = rng.uniform(0, self.side, self.dim)
            u = rng.standard_normal(self.dim)
            u /= np.linalg.norm(u)
            dist = rng.uniform(self.d_lo, self.d_hi)
            y = w.wrap(x + dist * u)
            qx = nearest_cluster_point(g, x)
            qy = nearest_cluster_point(g, y)
            h = hop_distance(g, qx, qy)
            if h is None:
                continue
            D.append(dist / self.r)
            H.append(h)
        return np.asarray(D), np.asarray(H, dtype=float)


def estimate_mu(intensity: float, r: float, window_side: float | None = None,
                distances=(20.0, 100.0), pairs: int = 500, replicas: int = 10,
                seed: int = 0, dim: int = 2, workers: int | None = None) -> EstimateWithError:
    """Slope through the origin of hop count against |x - y| / r.

    ``distances`` is the range of pair distances in radius units; ``pairs``
    pairs are spread evenly over ``replicas`` independent tori.
    """
    lo, hi = distances
    if not 0 < lo < hi:
        raise ValueError("need 0 < min distance < max distance")
    side = window_side if window_side is not None else 2.5 * hi * r
    if hi * r > side / 2:
        raise ValueError("pair distances must stay below half the torus side")
    per = max(1, math.ceil(pairs / replicas))
    job = _MuJob(float(intensity), float(r), float(side), lo * r, hi * r, per, dim, seed)
    res = replica_map(job, range(replicas), workers)
    D = np.concatenate([a for a, _ in res])
    H = np.concatenate([b for _, b in res])
    if D.size < 2:
        raise ValueError("too few connected pairs")
    slope = float(np.dot(D, H) / np.dot(D, D))
    resid = H - slope * D
    se = float(math.sqrt(np.dot(resid, resid) / (D.size - 1) / np.dot(D, D)))
    return EstimateWithError(slope, se, replicas,
                             dict(intensity=intensity, r=r, window_side=side,
                                  distances=(lo, hi), pairs=int(D.size)))


# --------------------------------------------------------------------- csv

ESTIMATE_COLUMNS = ("parameter", "estimate", "std_error", "replicas")


def write_estimates(path, rows, header_lines=()):
    """rows: iterable of (parameter name, EstimateWithError)."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(ESTIMATE_COLUMNS)
        for name, est in rows:
            w.writerow([name, repr(est.value), repr(est.std_error), est.replicas])


__all__ = [
    "EstimateWithError", "ScalingParams", "resolve_scaling", "critical_radius",
    "estimate_theta", "estimate_lambda_c", "estimate_mu", "spanning_thresholds",
    "spanning_curve", "spanning_point",
]
