import numpy as np


def _pairwise_sq(x):
    d = np.zeros((x.shape[0], x.shape[0]))
    for k in range(x.shape[1]):
        t = x[:, None, k] - x[None, :, k]
        d += t * t
    return d


def ward_linkage(coords):
    x = np.ascontiguousarray(coords, dtype=np.float64)
    n = x.shape[0]
    merges = np.empty((max(n - 1, 0), 4))
    if n < 2:
        return merges
    d = _pairwise_sq(x)
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    # upper triangle of live pairs; argmin over it is the lexicographic tie rule
    tri = np.where(np.triu(np.ones((n, n), dtype=bool), 1), d, np.inf)
    for step in range(n - 1):
        flat = int(np.argmin(tri))
        a, b = divmod(flat, n)
        na, nb = size[a], size[b]
        dab = d[a, b]
        merges[step] = (a, b, dab, na + nb)
        others = active.copy()
        others[[a, b]] = False
        ks = np.flatnonzero(others)
        nk = size[ks]
        v = ((na + nk) * d[a, ks] + (nb + nk) * d[b, ks] - nk * dab) / (na + nb + nk)
        d[a, ks] = v
        d[ks, a] = v
        active[b] = False
        size[a] = na + nb
        tri[b, :] = np.inf
        tri[:, b] = np.inf
        lo = ks < a
        tri[ks[lo], a] = v[lo]
        tri[a, ks[~lo]] = v[~lo]
    return merges


def nearest_index(points, base, chunk=2048):
    p = np.asarray(points, dtype=np.float64)
    q = np.asarray(base, dtype=np.float64)
    out = np.empty(p.shape[0], dtype=np.int64)
    for start in range(0, p.shape[0], chunk):
        blk = p[start:start + chunk]
        s = np.zeros((blk.shape[0], q.shape[0]))
        for k in range(p.shape[1]):
            t = blk[:, None, k] - q[None, :, k]
            s += t * t
        out[start:start + chunk] = np.argmin(s, axis=1)
    return out


def _residual_row(cap, cost, flow, u):
    fwd = cap[u] - flow[u] > 0
    bwd = flow[:, u] > 0
    back_cost = -cost[:, u]
    use_bwd = bwd & (~fwd | (back_cost <= cost[u]))
    return use_bwd, fwd | bwd, np.where(use_bwd, back_cost, cost[u])


def min_cost_flow(cap, cost, source, sink, need):
    cap = np.asarray(cap, dtype=np.int64)
    cost = np.asarray(cost, dtype=np.int64)
    V = cap.shape[0]
    big = np.iinfo(np.int64).max // 4
    flow = np.zeros((V, V), dtype=np.int64)
    pot = np.zeros(V, dtype=np.int64)
    pushed = 0
    total = 0
    while pushed < need:
        dist = np.full(V, big, dtype=np.int64)
        prev = np.full(V, -1, dtype=np.int64)
        done = np.zeros(V, dtype=bool)
        dist[source] = 0
        for _ in range(V):
            masked = np.where(done, big, dist)
            u = int(np.argmin(masked))
            if masked[u] >= big:
                break
            done[u] = True
            _, ok, c = _residual_row(cap, cost, flow, u)
            cand = dist[u] + c + pot[u] - pot
            better = ok & ~done & (cand < dist)
            dist[better] = cand[better]
            prev[better] = u
        if dist[sink] >= big:
            break
        reached = dist < big
        pot[reached] += dist[reached]
        path = []
        v = sink
        while v != source:
            u = int(prev[v])
            path.append((u, v))
            v = u
        amount = need - pushed
        kinds = []
        for u, v in reversed(path):
            use_bwd, _, _ = _residual_row(cap, cost, flow, u)
            if use_bwd[v]:
                r = flow[v, u]
            else:
                r = cap[u, v] - flow[u, v]
            kinds.append(use_bwd[v])
            amount = min(amount, int(r))
        for (u, v), bwd in zip(reversed(path), kinds):
            if bwd:
                flow[v, u] -= amount
                total -= amount * int(cost[v, u])
            else:
                flow[u, v] += amount
                total += amount * int(cost[u, v])
        pushed += amount
    return flow, pushed, total
