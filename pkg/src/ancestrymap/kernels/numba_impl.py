import numpy as np
from numba import njit

_INF = np.inf


@njit(cache=True)
def _pairwise_sq(x):
    n, p = x.shape
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(p):
                t = x[i, k] - x[j, k]
                s += t * t
            d[i, j] = s
            d[j, i] = s
    return d


@njit(cache=True)
def _row_min(d, active, i, n):
    best = _INF
    arg = -1
    for j in range(i + 1, n):
        if active[j] and d[i, j] < best:
            best = d[i, j]
            arg = j
    return best, arg


def ward_linkage(coords):
    return _ward(np.ascontiguousarray(coords, dtype=np.float64))


@njit(cache=True)
def _ward(x):
    n = x.shape[0]
    merges = np.empty((max(n - 1, 0), 4))
    if n < 2:
        return merges
    d = _pairwise_sq(x)
    size = np.ones(n)
    active = np.ones(n, dtype=np.bool_)
    nn = np.full(n, -1, dtype=np.int64)
    nnd = np.full(n, _INF)
    for i in range(n - 1):
        nnd[i], nn[i] = _row_min(d, active, i, n)

    for step in range(n - 1):
        best = _INF
        a = -1
        for i in range(n):
            if active[i] and nn[i] >= 0 and nnd[i] < best:
                best = nnd[i]
                a = i
        b = nn[a]
        na = size[a]
        nb = size[b]
        dab = d[a, b]
        merges[step, 0] = a
        merges[step, 1] = b
        merges[step, 2] = dab
        merges[step, 3] = na + nb
        for k in range(n):
            if active[k] and k != a and k != b:
                nk = size[k]
                v = ((na + nk) * d[a, k] + (nb + nk) * d[b, k] - nk * dab) / (na + nb + nk)
                d[a, k] = v
                d[k, a] = v
        active[b] = False
        size[a] = na + nb
        nn[b] = -1
        nnd[b] = _INF
        for k in range(n):
            if not active[k]:
                continue
            if k == a:
                nnd[k], nn[k] = _row_min(d, active, k, n)
            elif k < a:
                if nn[k] == a or nn[k] == b:
                    nnd[k], nn[k] = _row_min(d, active, k, n)
                elif d[k, a] < nnd[k] or (d[k, a] == nnd[k] and a < nn[k]):
                    nnd[k] = d[k, a]
                    nn[k] = a
            elif nn[k] == b:
                nnd[k], nn[k] = _row_min(d, active, k, n)
    return merges


def nearest_index(points, base):
    return _nearest(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(base, dtype=np.float64),
    )


@njit(cache=True)
def _nearest(p, q):
    out = np.empty(p.shape[0], dtype=np.int64)
    dim = p.shape[1]
    for i in range(p.shape[0]):
        best = _INF
        arg = -1
        for j in range(q.shape[0]):
            s = 0.0
            for k in range(dim):
                t = p[i, k] - q[j, k]
                s += t * t
            if s < best:
                best = s
                arg = j
        out[i] = arg
    return out


def min_cost_flow(cap, cost, source, sink, need):
    flow, pushed, total = _ssp(
        np.ascontiguousarray(cap, dtype=np.int64),
        np.ascontiguousarray(cost, dtype=np.int64),
        int(source),
        int(sink),
        int(need),
    )
    return flow, int(pushed), int(total)


@njit(cache=True)
def _ssp(cap, cost, source, sink, need):
    V = cap.shape[0]
    big = np.iinfo(np.int64).max // 4
    flow = np.zeros((V, V), dtype=np.int64)
    pot = np.zeros(V, dtype=np.int64)
    dist = np.empty(V, dtype=np.int64)
    prev = np.empty(V, dtype=np.int64)
    done = np.empty(V, dtype=np.bool_)
    pushed = 0
    total = 0
    while pushed < need:
        dist[:] = big
        prev[:] = -1
        done[:] = False
        dist[source] = 0
        for _ in range(V):
            u = -1
            du = big
            for w in range(V):
                if not done[w] and dist[w] < du:
                    du = dist[w]
                    u = w
            if u < 0:
                break
            done[u] = True
            for v in range(V):
                if done[v]:
                    continue
                fwd = cap[u, v] - flow[u, v] > 0
                bwd = flow[v, u] > 0
                if bwd and (not fwd or -cost[v, u] <= cost[u, v]):
                    c = -cost[v, u]
                elif fwd:
                    c = cost[u, v]
                else:
                    continue
                cand = du + c + pot[u] - pot[v]
                if cand < dist[v]:
                    dist[v] = cand
                    prev[v] = u
        if dist[sink] >= big:
            break
        for v in range(V):
            if dist[v] < big:
                pot[v] += dist[v]
        # bottleneck
        amount = need - pushed
        v = sink
        while v != source:
            u = prev[v]
            fwd = cap[u, v] - flow[u, v] > 0
            bwd = flow[v, u] > 0
            if bwd and (not fwd or -cost[v, u] <= cost[u, v]):
                r = flow[v, u]
            else:
                r = cap[u, v] - flow[u, v]
            if r < amount:
                amount = r
            v = u
        v = sink
        while v != source:
            u = prev[v]
            fwd = cap[u, v] - flow[u, v] > 0
            bwd = flow[v, u] > 0
            if bwd and (not fwd or -cost[v, u] <= cost[u, v]):
                flow[v, u] -= amount
                total -= amount * cost[v, u]
            else:
                flow[u, v] += amount
                total += amount * cost[u, v]
            v = u
        pushed += amount
    return flow, pushed, total
