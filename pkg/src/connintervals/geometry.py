"""Windows, Poisson point sampling and grid-accelerated radius queries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MAX_DIM = 4
# Hard cap on the number of points a single sample may hold.
MAX_POINTS = 50_000_000


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Window:
    """Axis-aligned cube ``[0, side]^dim``."""

    dim: int = 2
    side: float = 1.0
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if self.dim > MAX_DIM:
            raise ValueError(f"dim > {MAX_DIM} is not supported")
        if not (self.side > 0 and math.isfinite(self.side)):
            raise ValueError(f"side must be positive and finite, got {self.side!r}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def volume(self) -> float:
        return float(self.side) ** self.dim

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    def displacement(self, a, b) -> np.ndarray:
        """``b - a``, using the minimal image on a torus."""
        diff = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.periodic:
            diff = diff - self.side * np.round(diff / self.side)
        return diff

    def distance(self, a, b) -> np.ndarray:
        return np.sqrt(np.sum(self.displacement(a, b) ** 2, axis=-1))

    def wrap(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if not self.periodic:
            return pts
        out = np.mod(pts, self.side)
        out[out >= self.side] = 0.0
        return out

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all((pts >= 0.0) & (pts <= self.side), axis=1)


def unit_ball_volume(d: int) -> float:
    """Lebesgue volume of the unit ball in dimension d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    intensity: float
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.window.dim)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if pts.shape[0] and not np.all(self.window.contains(pts)):
            raise ValueError("all points must lie inside the window")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.window.dim


def sample_ppp(intensity: float, window: Window, seed) -> PointSet:
    """Homogeneous Poisson process of the given intensity in ``window``.

    ``seed`` is anything ``numpy.random.default_rng`` accepts, including an
    existing Generator (which is then advanced).
    """
    if intensity < 0 or not math.isfinite(intensity):
        raise ValueError(f"intensity must be a nonnegative finite number, got {intensity!r}")
    mean = intensity * window.volume
    if mean > MAX_POINTS:
        raise OverflowError(
            f"expected point count {mean:.3g} exceeds capacity {MAX_POINTS:.3g}")
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(mean)) if mean > 0 else 0
    pts = rng.uniform(0.0, window.side, size=(n, window.dim))
    return PointSet(pts, float(intensity), window)


@dataclass(frozen=True)
class GridIndex:
    """Uniform cell grid over a point set.

    Cells have width ``>= cell_size``; on a torus the number of cells per axis
    is ``floor(side / cell_size)`` so the cells tile the window exactly.
    """

    cell_size: float
    window: Window
    ncell: int
    buckets: dict = field(repr=False)
    _cell_of: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, ps: PointSet, cell_size: float) -> "GridIndex":
        if not cell_size > 0:
            raise ValueError("cell_size must be positive")
        w = ps.window
        ncell = max(1, int(math.floor(w.side / cell_size)))
        width = w.side / ncell
        cells = np.floor(ps.points / width).astype(np.int64)
        np.clip(cells, 0, ncell - 1, out=cells)
        buckets: dict = {}
        if len(ps):
            order = np.lexsort(cells.T[::-1])
            sorted_cells = cells[order]
            change = np.any(np.diff(sorted_cells, axis=0) != 0, axis=1)
            starts = np.concatenate([[0], np.nonzero(change)[0] + 1, [len(order)]])
            for a, b in zip(starts[:-1], starts[1:]):
                buckets[tuple(int(c) for c in sorted_cells[a])] = order[a:b]
        return cls(float(cell_size), w, ncell, buckets, cells)

    @property
    def width(self) -> float:
        return self.window.side / self.ncell

    def cell_of(self, x) -> tuple:
        c = np.floor(np.asarray(x, dtype=float) / self.width).astype(np.int64)
        return tuple(int(v) for v in c)

    def candidates(self, center) -> np.ndarray:
        """Indices stored in the 3^d block of cells around ``center``."""
        base = self.cell_of(center)
        d = self.window.dim
        seen = set()
        chunks = []
        for off in np.ndindex(*([3] * d)):
            cell = []
            for k in range(d):
                c = base[k] + off[k] - 1
                if self.window.periodic:
                    c %= self.ncell
                elif c < 0 or c >= self.ncell:
                    break
                cell.append(c)
            else:
                key = tuple(cell)
                if key in seen:
                    continue
                seen.add(key)
                if key in self.buckets:
                    chunks.append(self.buckets[key])
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(chunks)


def radius_neighbors(ps: PointSet, idx: GridIndex, center, r: float) -> np.ndarray:
    """Sorted indices of points within distance ``r`` (closed ball)."""
    if r > idx.cell_size:
        raise ValueError(
            f"query radius {r} exceeds grid cell size {idx.cell_size}; rebuild the index")
    cand = idx.candidates(center)
    if cand.size == 0:
        return cand
    dist = ps.window.distance(center, ps.points[cand])
    return np.sort(cand[dist <= r])


def ball_count(ps: PointSet, center, r: float) -> int:
    """Number of points of ``ps`` in the closed ball of radius r."""
    if len(ps) == 0:
        return 0
    return int(np.count_nonzero(ps.window.distance(center, ps.points) <= r))


def close_pairs(ps: PointSet, r: float, idx: GridIndex | None = None) -> np.ndarray:
    """All index pairs (i < j) at distance <= r, as an (m, 2) array.

    Uses the cell grid: every point is compared with the points of the 3^d
    surrounding cells. Falls back to a dense scan for tiny tori where the
    neighbourhood would wrap onto itself.
    """
    n = len(ps)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    w = ps.window
    if idx is None or idx.width < r:
        idx = GridIndex.build(ps, r)
    if w.periodic and idx.ncell < 3 or n <= 64:
        i, j = np.triu_indices(n, 1)
        keep = w.distance(ps.points[i], ps.points[j]) <= r
        return np.stack([i[keep], j[keep]], axis=1).astype(np.int64)
    d = w.dim
    nc = idx.ncell
    cells = idx._cell_of
    lin = np.ravel_multi_index(cells.T, (nc,) * d)
    order = np.argsort(lin, kind="stable")
    lin_sorted = lin[order]
    start = np.searchsorted(lin_sorted, np.arange(nc ** d), side="left")
    stop = np.searchsorted(lin_sorted, np.arange(nc ** d), side="right")
    pairs = []
    for off in np.ndindex(*([3] * d)):
        off = np.asarray(off) - 1
        nb = cells + off
        if w.periodic:
            nb %= nc
            valid = np.ones(n, dtype=bool)
        else:
            valid = np.all((nb >= 0) & (nb < nc), axis=1)
        src = np.nonzero(valid)[0]
        nb_lin = np.ravel_multi_index(nb[src].T, (nc,) * d)
        cnt = stop[nb_lin] - start[nb_lin]
        if cnt.sum() == 0:
            continue
        ii = np.repeat(src, cnt)
        offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        jj = order[np.repeat(start[nb_lin], cnt) + offs]
        keep = ii < jj
        ii, jj = ii[keep], jj[keep]
        close = w.distance(ps.points[ii], ps.points[jj]) <= r
        pairs.append(np.stack([ii[close], jj[close]], axis=1))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pairs).astype(np.int64)
