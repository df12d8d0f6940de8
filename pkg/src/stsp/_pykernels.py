"""Pure-Python enumeration kernel; reference twin of ``_ckernels``."""
from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple


def min_edge_uses(
    n_nodes: int,
    eu: Sequence[int],
    ev: Sequence[int],
    cost: Sequence[float],
    required: Sequence[int],
    cap: int = -1,
) -> Tuple[float, Optional[List[int]]]:
    """Cheapest ``x`` in ``{0,1,2}^E`` forming a connected even multigraph.

    Nodes are ``1..n_nodes`` with node 1 the depot; ``required`` must contain
    the depot.  The support must be connected, contain the depot and every
    required node.  With ``cap >= 0`` only vectors with ``sum(x) <= cap``
    count.  Among optimal vectors the lexicographically smallest is returned;
    ``(inf, None)`` means infeasible.
    """
    m = len(eu)
    req = [False] * (n_nodes + 1)
    for i in required:
        req[i] = True
    need_degree = len(set(required)) > 1
    last: List[List[int]] = [[] for _ in range(m)]
    last_edge = [-1] * (n_nodes + 1)
    for e in range(m):
        last_edge[eu[e]] = e
        last_edge[ev[e]] = e
    for i in range(1, n_nodes + 1):
        if last_edge[i] >= 0:
            last[last_edge[i]].append(i)
        elif need_degree and req[i]:
            return math.inf, None

    deg = [0] * (n_nodes + 1)
    x = [0] * m
    best = [math.inf, None]

    def connected() -> bool:
        parent = list(range(n_nodes + 1))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in range(m):
            if x[e]:
                parent[find(eu[e])] = find(ev[e])
        root = find(1)
        for i in range(1, n_nodes + 1):
            if (req[i] or deg[i]) and find(i) != root:
                return False
        return True

    def rec(e: int, partial: float, total: int) -> None:
        if partial >= best[0]:
            return
        if e == m:
            if need_degree or total:
                if not connected():
                    return
            best[0] = partial
            best[1] = list(x)
            return
        u, v, c = eu[e], ev[e], cost[e]
        for val in (0, 1, 2):
            if cap >= 0 and total + val > cap:
                break
            x[e] = val
            deg[u] += val
            deg[v] += val
            ok = True
            for i in last[e]:
                if deg[i] % 2 or (need_degree and req[i] and deg[i] == 0):
                    ok = False
                    break
            if ok:
                rec(e + 1, partial + c * val, total + val)
            deg[u] -= val
            deg[v] -= val
        x[e] = 0

    rec(0, 0.0, 0)
    return best[0], best[1]
