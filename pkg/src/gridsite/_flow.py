"""Min-cost-flow kernel: successive shortest paths over flat arrays.

Capacities are integers (milli-MW), costs are floats.  Dense Dijkstra with
node potentials keeps reduced costs nonnegative, which certifies optimality
through complementary slackness.  Networks here are tiny (tens of nodes),
so each relaxation pass simply scans the whole arc list; determinism comes
from fixed scan order plus strict-inequality label updates (lowest arc and
node index win ties).

The entry points release the GIL so scenario batches can run on a thread
pool; every scenario writes only its own output rows.
"""

import numpy as np
from numba import njit

OK = 0
INFEASIBLE = 1
STALLED = 2


@njit(cache=True, nogil=True)
def solve_single(tail, head, cost, cap, n_nodes, source, sink, need,
                 flow, pot, dist, visited, parent_arc, parent_back):
    n_arcs = tail.shape[0]
    for a in range(n_arcs):
        flow[a] = 0
    for v in range(n_nodes):
        pot[v] = 0.0
    pushed = 0
    guard = 50 * n_arcs + 1000
    while pushed < need:
        guard -= 1
        if guard <= 0:
            return STALLED
        for v in range(n_nodes):
            dist[v] = np.inf
            visited[v] = False
            parent_arc[v] = -1
            parent_back[v] = False
        dist[source] = 0.0
        for _ in range(n_nodes):
            u = -1
            best = np.inf
            for v in range(n_nodes):
                if not visited[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            visited[u] = True
            for a in range(n_arcs):
                if tail[a] == u and flow[a] < cap[a]:
                    v = head[a]
                    if not visited[v]:
                        nd = dist[u] + cost[a] + pot[u] - pot[v]
                        if nd < dist[v]:
                            dist[v] = nd
                            parent_arc[v] = a
                            parent_back[v] = False
                elif head[a] == u and flow[a] > 0:
                    v = tail[a]
                    if not visited[v]:
                        nd = dist[u] - cost[a] + pot[u] - pot[v]
                        if nd < dist[v]:
                            dist[v] = nd
                            parent_arc[v] = a
                            parent_back[v] = True
        if not np.isfinite(dist[sink]):
            return INFEASIBLE
        d_sink = dist[sink]
        for v in range(n_nodes):
            if dist[v] < d_sink:
                pot[v] += dist[v]
            else:
                pot[v] += d_sink
        bottleneck = need - pushed
        v = sink
        while v != source:
            a = parent_arc[v]
            if parent_back[v]:
                r = flow[a]
                v = head[a]
            else:
                r = cap[a] - flow[a]
                v = tail[a]
            if r < bottleneck:
                bottleneck = r
        v = sink
        while v != source:
            a = parent_arc[v]
            if parent_back[v]:
                flow[a] -= bottleneck
                v = head[a]
            else:
                flow[a] += bottleneck
                v = tail[a]
        pushed += bottleneck
    return OK


@njit(cache=True, nogil=True)
def solve_slice(tail, head, cost, caps, needs, n_nodes, source, sink,
                flows_out, pots_out, status_out, start, stop):
    """Solve scenarios [start, stop); per-scenario rows of caps/outputs."""
    dist = np.empty(n_nodes, dtype=np.float64)
    visited = np.empty(n_nodes, dtype=np.bool_)
    parent_arc = np.empty(n_nodes, dtype=np.int64)
    parent_back = np.empty(n_nodes, dtype=np.bool_)
    for s in range(start, stop):
        status_out[s] = solve_single(
            tail, head, cost, caps[s], n_nodes, source, sink, needs[s],
            flows_out[s], pots_out[s], dist, visited, parent_arc, parent_back,
        )
