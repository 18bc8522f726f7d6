"""Slow, obviously-correct reference implementations used by the tests."""

from collections import deque

import numpy as np


def adjacency(points, window, r):
    n = len(points)
    adj = [[] for _ in range(n)]
    for i in range(n):
        d = window.distance(points[i], points)
        for j in np.nonzero(d <= r)[0]:
            if j != i:
                adj[i].append(int(j))
    return adj


def bfs_levels(adj, starts):
    level = {s: 0 for s in starts}
    q = deque(starts)
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in level:
                level[v] = level[u] + 1
                q.append(v)
    return level


def k_hop(points, window, r, source, target, k):
    """Path source -> relays -> target of at most k edges."""
    if window.distance(source, target) <= r:
        return True
    if len(points) == 0:
        return False
    adj = adjacency(points, window, r)
    starts = [int(i) for i in np.nonzero(window.distance(source, points) <= r)[0]]
    ends = set(int(i) for i in np.nonzero(window.distance(target, points) <= r)[0])
    level = bfs_levels(adj, starts)
    # relays used: level + 1; edges: level + 2
    return any(v in ends and lv + 2 <= k for v, lv in level.items())


def box_percolates(points, window, r, x, L):
    if len(points) == 0:
        return False
    sup = np.max(np.abs(window.displacement(x, points)), axis=1)
    inside = sup <= L / 2
    near = (window.distance(x, points) <= r) & inside
    adj = adjacency(points, window, r)
    seen = set(int(i) for i in np.nonzero(near)[0])
    q = deque(seen)
    while q:
        u = q.popleft()
        if sup[u] >= L / 2 - r:
            return True
        for v in adj[u]:
            if inside[v] and v not in seen:
                seen.add(v)
                q.append(v)
    return False


def pointwise_union(a, b, t):
    return (t in a) or (t in b)


def grid_run(mask_fn, t, step, m):
    """Linear scan of the grid run through t."""
    if not mask_fn(t):
        return 0.0
    left = 0
    while left < m and mask_fn(t - (left + 1) * step):
        left += 1
    right = 0
    while right < m and mask_fn(t + (right + 1) * step):
        right += 1
    return (left + right) * step
