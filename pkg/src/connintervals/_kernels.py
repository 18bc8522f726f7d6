"""Compiled inner loops.

Everything here works on plain numpy arrays so the public modules can keep
their dataclass surfaces while the per-time-step graph searches run at
native speed. Torus kernels assume a periodic cube of side ``W`` split into
``ncell**d`` cells of width ``W / ncell >= r``.
"""

import numpy as np
from numba import njit


# ---------------------------------------------------------------- union-find


@njit(cache=True)
def uf_find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def uf_union(parent, size, a, b):
    ra = uf_find(parent, a)
    rb = uf_find(parent, b)
    if ra == rb:
        return ra
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@njit(cache=True)
def component_labels(n, src, dst):
    """Labels 0..c-1 in order of first appearance, plus the count c."""
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    for e in range(src.shape[0]):
        uf_union(parent, size, src[e], dst[e])
    labels = np.empty(n, np.int64)
    remap = np.full(n, -1, np.int64)
    c = 0
    for i in range(n):
        root = uf_find(parent, i)
        if remap[root] < 0:
            remap[root] = c
            c += 1
        labels[i] = remap[root]
    return labels, c


@njit(cache=True)
def bottleneck_thresholds(order_rank, lo, hi, touch_a, touch_b):
    """Rank at which terminal A first joins terminal B when vertices are
    switched on in increasing ``order_rank``.

    ``lo``/``hi`` are the edge endpoints sorted by the later of their two
    ranks (``hi`` holds the later vertex). Returns -1 if never joined.
    """
    n = order_rank.shape[0]
    parent = np.arange(n + 2)
    size = np.ones(n + 2, np.int64)
    a = n
    b = n + 1
    by_rank = np.empty(n, np.int64)
    for i in range(n):
        by_rank[order_rank[i]] = i
    ptr = 0
    m = lo.shape[0]
    for step in range(n):
        v = by_rank[step]
        if touch_a[v]:
            uf_union(parent, size, v, a)
        if touch_b[v]:
            uf_union(parent, size, v, b)
        while ptr < m and order_rank[hi[ptr]] == step:
            uf_union(parent, size, lo[ptr], hi[ptr])
            ptr += 1
        if uf_find(parent, a) == uf_find(parent, b):
            return step
    return -1


# ------------------------------------------------------- static graph search


@njit(cache=True)
def bfs_hop(indptr, indices, source, target):
    """Edge count of a shortest path, or -1 when unreachable."""
    if source == target:
        return 0
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[source] = 0
    head = 0
    tail = 1
    queue[0] = source
    while head < tail:
        u = queue[head]
        head += 1
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                if v == target:
                    return dist[v]
                queue[tail] = v
                tail += 1
    return -1


@njit(cache=True)
def bfs_all(indptr, indices, source):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[source] = 0
    head = 0
    tail = 1
    queue[0] = source
    while head < tail:
        u = queue[head]
        head += 1
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return dist


@njit(cache=True)
def depth_limited_reach(indptr, indices, starts, goal, max_depth, stamp, epoch):
    """True if a vertex flagged in ``goal`` is within ``max_depth`` levels of
    the start set (start vertices sit at level 1)."""
    n = indptr.shape[0] - 1
    depth = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    tail = 0
    for s in starts:
        if stamp[s] != epoch:
            stamp[s] = epoch
            depth[s] = 1
            if goal[s]:
                return True
            queue[tail] = s
            tail += 1
    head = 0
    while head < tail:
        u = queue[head]
        head += 1
        if depth[u] >= max_depth:
            continue
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if stamp[v] != epoch:
                stamp[v] = epoch
                depth[v] = depth[u] + 1
                if goal[v]:
                    return True
                queue[tail] = v
                tail += 1
    return False


@njit(cache=True)
def masked_reach(indptr, indices, starts, allowed, goal, stamp, epoch):
    """Search restricted to ``allowed`` vertices; True once a ``goal`` vertex
    is reached."""
    n = indptr.shape[0] - 1
    queue = np.empty(n, np.int64)
    tail = 0
    for s in starts:
        if allowed[s] and stamp[s] != epoch:
            stamp[s] = epoch
            if goal[s]:
                return True
            queue[tail] = s
            tail += 1
    head = 0
    while head < tail:
        u = queue[head]
        head += 1
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if allowed[v] and stamp[v] != epoch:
                stamp[v] = epoch
                if goal[v]:
                    return True
                queue[tail] = v
                tail += 1
    return False


# ------------------------------------------------------------- torus helpers


def neighbor_offsets(d):
    grids = np.meshgrid(*([np.array([-1, 0, 1])] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


@njit(cache=True)
def _wrap(dx, W):
    return dx - W * np.floor(dx / W + 0.5)


@njit(cache=True)
def _cell_coords(x, inv_w, ncell, out):
    for k in range(x.shape[0]):
        c = int(np.floor(x[k] * inv_w))
        c = ((c % ncell) + ncell) % ncell
        out[k] = c


@njit(cache=True)
def _cell_id(coords, off, ncell):
    cid = 0
    for k in range(coords.shape[0]):
        c = coords[k] + off[k]
        c = ((c % ncell) + ncell) % ncell
        cid = cid * ncell + c
    return cid


@njit(cache=True)
def _link(i, c, head, nxt, prv, cell):
    cell[i] = c
    prv[i] = -1
    nxt[i] = head[c]
    if head[c] >= 0:
        prv[head[c]] = i
    head[c] = i


@njit(cache=True)
def _unlink(i, head, nxt, prv, cell):
    c = cell[i]
    if prv[i] >= 0:
        nxt[prv[i]] = nxt[i]
    else:
        head[c] = nxt[i]
    if nxt[i] >= 0:
        prv[nxt[i]] = prv[i]


@njit(cache=True)
def _build_cells(pos, W, ncell, head, nxt, prv, cell):
    d = pos.shape[1]
    inv_w = ncell / W
    coords = np.empty(d, np.int64)
    zero = np.zeros(d, np.int64)
    head[:] = -1
    for i in range(pos.shape[0]):
        _cell_coords(pos[i], inv_w, ncell, coords)
        _link(i, _cell_id(coords, zero, ncell), head, nxt, prv, cell)


@njit(cache=True)
def _apply_event(i, disp, pos, W, ncell, head, nxt, prv, cell, coords, zero):
    d = pos.shape[1]
    inv_w = ncell / W
    for k in range(d):
        v = pos[i, k] + disp[k]
        v = v - W * np.floor(v / W)
        if v >= W:
            v = 0.0
        pos[i, k] = v
    _cell_coords(pos[i], inv_w, ncell, coords)
    c = _cell_id(coords, zero, ncell)
    if c != cell[i]:
        _unlink(i, head, nxt, prv, cell)
        _link(i, c, head, nxt, prv, cell)


@njit(cache=True)
def _box_search(x, pos, half, r, W, ncell, head, nxt, offsets, stamp, epoch,
                queue, coords):
    """Does point ``x`` connect, through nodes inside the sup-norm box of
    half-side ``half`` around it, to a node at sup-distance >= half - r?"""
    d = pos.shape[1]
    inv_w = ncell / W
    r2 = r * r
    shell = half - r
    noff = offsets.shape[0]
    tail = 0
    _cell_coords(x, inv_w, ncell, coords)
    for o in range(noff):
        j = head[_cell_id(coords, offsets[o], ncell)]
        while j >= 0:
            if stamp[j] != epoch:
                dist2 = 0.0
                sup = 0.0
                for k in range(d):
                    dx = _wrap(pos[j, k] - x[k], W)
                    dist2 += dx * dx
                    if abs(dx) > sup:
                        sup = abs(dx)
                if dist2 <= r2 and sup <= half:
                    stamp[j] = epoch
                    if sup >= shell:
                        return True
                    queue[tail] = j
                    tail += 1
            j = nxt[j]
    qh = 0
    while qh < tail:
        u = queue[qh]
        qh += 1
        _cell_coords(pos[u], inv_w, ncell, coords)
        for o in range(noff):
            j = head[_cell_id(coords, offsets[o], ncell)]
            while j >= 0:
                if stamp[j] != epoch:
                    dist2 = 0.0
                    for k in range(d):
                        dx = _wrap(pos[j, k] - pos[u, k], W)
                        dist2 += dx * dx
                    if dist2 <= r2:
                        sup = 0.0
                        for k in range(d):
                            dx = abs(_wrap(pos[j, k] - x[k], W))
                            if dx > sup:
                                sup = dx
                        if sup <= half:
                            stamp[j] = epoch
                            if sup >= shell:
                                return True
                            queue[tail] = j
                            tail += 1
                j = nxt[j]
    return False


@njit(cache=True)
def box_membership(pos0, ev_t, ev_node, ev_disp, eval_t, query, half, r, W,
                   ncell, offsets):
    """Finite-box percolation indicator of every query path at every
    evaluation time; events with time <= t are applied before evaluating t."""
    pos = pos0.copy()
    n, d = pos.shape
    head = np.full(ncell ** d, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    prv = np.full(n, -1, np.int64)
    cell = np.zeros(n, np.int64)
    _build_cells(pos, W, ncell, head, nxt, prv, cell)
    stamp = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    coords = np.empty(d, np.int64)
    zero = np.zeros(d, np.int64)
    nq = query.shape[0]
    ng = eval_t.shape[0]
    out = np.zeros((nq, ng), np.bool_)
    epoch = 0
    e = 0
    ne = ev_t.shape[0]
    for g in range(ng):
        t = eval_t[g]
        while e < ne and ev_t[e] <= t:
            _apply_event(ev_node[e], ev_disp[e], pos, W, ncell, head, nxt, prv,
                         cell, coords, zero)
            e += 1
        for q in range(nq):
            epoch += 1
            out[q, g] = _box_search(query[q, g], pos, half, r, W, ncell, head,
                                    nxt, offsets, stamp, epoch, queue, coords)
    return out


@njit(cache=True)
def _khop_search(x, pos, sinks, k, r, W, ncell, head, nxt, shead, snxt,
                 offsets, stamp, epoch, queue, depth, coords):
    d = pos.shape[1]
    inv_w = ncell / W
    r2 = r * r
    noff = offsets.shape[0]
    _cell_coords(x, inv_w, ncell, coords)
    for o in range(noff):
        s = shead[_cell_id(coords, offsets[o], ncell)]
        while s >= 0:
            dist2 = 0.0
            for kk in range(d):
                dx = _wrap(sinks[s, kk] - x[kk], W)
                dist2 += dx * dx
            if dist2 <= r2:
                return True
            s = snxt[s]
    if k < 2:
        return False
    tail = 0
    for o in range(noff):
        j = head[_cell_id(coords, offsets[o], ncell)]
        while j >= 0:
            if stamp[j] != epoch:
                dist2 = 0.0
                for kk in range(d):
                    dx = _wrap(pos[j, kk] - x[kk], W)
                    dist2 += dx * dx
                if dist2 <= r2:
                    stamp[j] = epoch
                    depth[j] = 1
                    queue[tail] = j
                    tail += 1
            j = nxt[j]
    qh = 0
    while qh < tail:
        u = queue[qh]
        qh += 1
        _cell_coords(pos[u], inv_w, ncell, coords)
        for o in range(noff):
            s = shead[_cell_id(coords, offsets[o], ncell)]
            while s >= 0:
                dist2 = 0.0
                for kk in range(d):
                    dx = _wrap(sinks[s, kk] - pos[u, kk], W)
                    dist2 += dx * dx
                if dist2 <= r2:
                    return True
                s = snxt[s]
        if depth[u] >= k - 1:
            continue
        for o in range(noff):
            j = head[_cell_id(coords, offsets[o], ncell)]
            while j >= 0:
                if stamp[j] != epoch:
                    dist2 = 0.0
                    for kk in range(d):
                        dx = _wrap(pos[j, kk] - pos[u, kk], W)
                        dist2 += dx * dx
                    if dist2 <= r2:
                        stamp[j] = epoch
                        depth[j] = depth[u] + 1
                        queue[tail] = j
                        tail += 1
                j = nxt[j]
    return False


@njit(cache=True)
def khop_membership(pos0, ev_t, ev_node, ev_disp, eval_t, src, sinks, k, r, W,
                    ncell, offsets, incremental):
    """k-hop reachability of any sink from the moving source at each
    evaluation time. Sinks are endpoints only, never relays.

    With ``incremental`` set, the search is skipped when no node jumped to or
    from within ``k * r`` of the (unmoved) source since the last evaluation.
    """
    pos = pos0.copy()
    n, d = pos.shape
    ncells = ncell ** d
    head = np.full(ncells, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    prv = np.full(n, -1, np.int64)
    cell = np.zeros(n, np.int64)
    _build_cells(pos, W, ncell, head, nxt, prv, cell)
    m = sinks.shape[0]
    shead = np.full(ncells, -1, np.int64)
    snxt = np.full(m, -1, np.int64)
    sprv = np.full(m, -1, np.int64)
    scell = np.zeros(m, np.int64)
    _build_cells(sinks, W, ncell, shead, snxt, sprv, scell)
    stamp = np.zeros(n, np.int64)
    depth = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    coords = np.empty(d, np.int64)
    zero = np.zeros(d, np.int64)
    ng = eval_t.shape[0]
    out = np.zeros(ng, np.bool_)
    reach2 = (k * r) ** 2
    epoch = 0
    e = 0
    ne = ev_t.shape[0]
    for g in range(ng):
        t = eval_t[g]
        dirty = (not incremental) or g == 0
        if not dirty:
            for kk in range(d):
                if src[g, kk] != src[g - 1, kk]:
                    dirty = True
        while e < ne and ev_t[e] <= t:
            i = ev_node[e]
            if not dirty:
                near = 0.0
                for kk in range(d):
                    dx = _wrap(pos[i, kk] - src[g, kk], W)
                    near += dx * dx
                if near <= reach2:
                    dirty = True
            _apply_event(i, ev_disp[e], pos, W, ncell, head, nxt, prv, cell,
                         coords, zero)
            if not dirty:
                near = 0.0
                for kk in range(d):
                    dx = _wrap(pos[i, kk] - src[g, kk], W)
                    near += dx * dx
                if near <= reach2:
                    dirty = True
            e += 1
        if dirty:
            epoch += 1
            out[g] = _khop_search(src[g], pos, sinks, k, r, W, ncell, head, nxt,
                                  shead, snxt, offsets, stamp, epoch, queue,
                                  depth, coords)
        else:
            out[g] = out[g - 1]
    return out
