"""Dinic max-flow / min-cut on integer capacities.

Capacities are int64 and all arithmetic is exact, so the minimum cut is a
true minimizer of the integer cut functional.  The kernels are jitted with
numba when available; the pure-Python path is identical but slow.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return deco


_INF = np.int64(1) << np.int64(62)


@njit(cache=True)
def _dinic(n, s, t, to, cap, adj_start, adj_list):  # pragma: no cover - jitted
    level = np.empty(n, np.int64)
    it = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    stack = np.empty(n + 1, np.int64)
    stack_edge = np.empty(n + 1, np.int64)
    flow = np.int64(0)
    while True:
        for u in range(n):
            level[u] = -1
        level[s] = 0
        qh, qt = 0, 0
        queue[qt] = s
        qt += 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            for k in range(adj_start[u], adj_start[u + 1]):
                e = adj_list[k]
                v = to[e]
                if cap[e] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[t] < 0:
            break
        for u in range(n):
            it[u] = adj_start[u]
        while True:
            depth = 0
            stack[0] = s
            found = False
            while depth >= 0:
                u = stack[depth]
                if u == t:
                    found = True
                    break
                advanced = False
                while it[u] < adj_start[u + 1]:
                    e = adj_list[it[u]]
                    v = to[e]
                    if cap[e] > 0 and level[v] == level[u] + 1:
                        stack_edge[depth] = e
                        depth += 1
                        stack[depth] = v
                        advanced = True
                        break
                    it[u] += 1
                if not advanced:
                    level[u] = -1
                    depth -= 1
                    if depth >= 0:
                        it[stack[depth]] += 1
            if not found:
                break
            aug = _INF
            for d in range(depth):
                e = stack_edge[d]
                if cap[e] < aug:
                    aug = cap[e]
            for d in range(depth):
                e = stack_edge[d]
                cap[e] -= aug
                cap[e ^ 1] += aug
            flow += aug
    # source side of a minimum cut: residual reachability from s
    side = np.zeros(n, np.bool_)
    side[s] = True
    qh, qt = 0, 0
    queue[qt] = s
    qt += 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for k in range(adj_start[u], adj_start[u + 1]):
            e = adj_list[k]
            v = to[e]
            if cap[e] > 0 and not side[v]:
                side[v] = True
                queue[qt] = v
                qt += 1
    return flow, side


def max_flow_min_cut(n_nodes, edge_u, edge_v, edge_cap, source, sink):
    """Max flow between source and sink; every arc (u, v, c) gets a reverse
    arc of capacity 0.  Returns (flow, source_side boolean array)."""
    edge_u = np.asarray(edge_u, np.int64)
    edge_v = np.asarray(edge_v, np.int64)
    edge_cap = np.asarray(edge_cap, np.int64)
    ne = len(edge_u)
    to = np.empty(2 * ne, np.int64)
    cap = np.empty(2 * ne, np.int64)
    frm = np.empty(2 * ne, np.int64)
    to[0::2] = edge_v
    to[1::2] = edge_u
    frm[0::2] = edge_u
    frm[1::2] = edge_v
    cap[0::2] = edge_cap
    cap[1::2] = 0
    counts = np.bincount(frm, minlength=n_nodes)
    adj_start = np.zeros(n_nodes + 1, np.int64)
    np.cumsum(counts, out=adj_start[1:])
    order = np.argsort(frm, kind="stable")
    adj_list = order.astype(np.int64)
    flow, side = _dinic(int(n_nodes), int(source), int(sink),
                        to, cap, adj_start, adj_list)
    return int(flow), side
