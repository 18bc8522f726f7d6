"""Gilbert graphs, components, hop distances and finite-box percolation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import GridIndex, PointSet, close_pairs, radius_neighbors


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = np.arange(n)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, a: int) -> int:
        return int(K.uf_find(self.parent, a))

    def union(self, a: int, b: int) -> int:
        return int(K.uf_union(self.parent, self.size, a, b))

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


@dataclass
class _Scratch:
    stamp: np.ndarray
    epoch: int = 0

    def next(self) -> int:
        self.epoch += 1
        return self.epoch


@dataclass(frozen=True)
class ClusterStats:
    largest_size: int
    largest_diameter: float
    theta_hat: float


@dataclass(frozen=True)
class SpatialGraph:
    positions: PointSet
    radius: float
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    components: np.ndarray = field(repr=False)
    component_sizes: np.ndarray = field(repr=False)
    index: GridIndex = field(repr=False)
    _scratch: _Scratch = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.positions)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def largest_component(self) -> int:
        if len(self) == 0:
            raise ValueError("empty graph has no components")
        return int(np.argmax(self.component_sizes))

    def _check_vertex(self, i):
        if not (0 <= int(i) < len(self)):
            raise IndexError(f"vertex {i} out of range for graph of {len(self)} vertices")

    def points_near(self, x, r: float | None = None) -> np.ndarray:
        """Graph vertices within the connection radius of an extra point."""
        return radius_neighbors(self.positions, self.index, x, self.radius if r is None else r)

    def edges(self) -> np.ndarray:
        rows = np.repeat(np.arange(len(self)), np.diff(self.indptr))
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)


def build_graph(ps: PointSet, radius: float) -> SpatialGraph:
    """Radius-``radius`` graph with CSR adjacency and union-find labels."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    n = len(ps)
    idx = GridIndex.build(ps, radius)
    pairs = close_pairs(ps, radius, idx)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    labels, c = K.component_labels(n, pairs[:, 0].copy(), pairs[:, 1].copy())
    sizes = np.bincount(labels, minlength=c)
    return SpatialGraph(ps, float(radius), indptr, dst.astype(np.int64), labels,
                        sizes, idx, _Scratch(np.zeros(n, dtype=np.int64)))


def hop_distance(g: SpatialGraph, i: int, j: int) -> int | None:
    """Fewest edges between vertices i and j; ``None`` if unreachable."""
    g._check_vertex(i)
    g._check_vertex(j)
    if g.components[i] != g.components[j]:
        return None
    h = K.bfs_hop(g.indptr, g.indices, int(i), int(j))
    return None if h < 0 else int(h)


def k_hop_connected(g: SpatialGraph, source, target, k: int) -> bool:
    """Whether ``source`` reaches ``target`` in at most k radius-hops relaying
    only through graph vertices (both endpoints are extra points)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    w = g.positions.window
    if w.distance(source, target) <= g.radius:
        return True
    if k == 1 or len(g) == 0:
        return False
    starts = g.points_near(source)
    if starts.size == 0:
        return False
    goal = np.zeros(len(g), dtype=bool)
    goal[g.points_near(target)] = True
    if not goal.any():
        return False
    sc = g._scratch
    return bool(K.depth_limited_reach(g.indptr, g.indices, starts, goal, k - 1,
                                      sc.stamp, sc.next()))


def _box_masks(g: SpatialGraph, x, L: float):
    w = g.positions.window
    half = L / 2.0
    if w.periodic:
        if L + 2 * g.radius > w.side:
            raise ValueError(
                f"box side {L} too large for periodic window of side {w.side} "
                f"(need L + 2r <= side)")
    else:
        x = np.asarray(x, dtype=float)
        if np.any(x - half < 0) or np.any(x + half > w.side):
            raise ValueError(f"box of side {L} around {x} leaves the open window")
    sup = np.max(np.abs(w.displacement(x, g.positions.points)), axis=1) if len(g) else np.empty(0)
    return sup <= half, sup >= half - g.radius


def percolates_beyond(g: SpatialGraph, x, L: float) -> bool:
    """Finite-box percolation: x links through vertices of its sup-norm box of
    side L to a vertex at sup-distance >= L/2 - r from x.

    For L >= 2r the event shrinks as L grows.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    inside, shell = _box_masks(g, x, L)
    if len(g) == 0:
        return False
    starts = g.points_near(x)
    starts = starts[inside[starts]]
    if starts.size == 0:
        return False
    sc = g._scratch
    return bool(K.masked_reach(g.indptr, g.indices, starts, inside, shell & inside,
                               sc.stamp, sc.next()))


def nearest_cluster_point(g: SpatialGraph, x) -> int:
    """Vertex of the largest component closest to x (lowest index on ties)."""
    if len(g) == 0:
        raise ValueError("empty graph")
    members = np.nonzero(g.components == g.largest_component)[0]
    dist = g.positions.window.distance(x, g.positions.points[members])
    return int(members[np.argmin(dist)])


def _spread(coords: np.ndarray, side: float, periodic: bool) -> float:
    if coords.size == 0:
        return 0.0
    if not periodic:
        return float(coords.max() - coords.min())
    c = np.sort(coords)
    gaps = np.diff(np.concatenate([c, [c[0] + side]]))
    return float(side - gaps.max())


def cluster_stats(g: SpatialGraph) -> ClusterStats:
    """Size, extent and vertex fraction of the largest component.

    The extent is the largest per-axis spread; on a torus it is the side minus
    the widest empty circular gap of the projections.
    """
    n = len(g)
    if n == 0:
        return ClusterStats(0, 0.0, 0.0)
    lab = g.largest_component
    pts = g.positions.points[g.components == lab]
    w = g.positions.window
    diam = max(_spread(pts[:, k], w.side, w.periodic) for k in range(w.dim))
    size = int(g.component_sizes[lab])
    return ClusterStats(size, diam, size / n)
