# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled enumeration kernel; same contract as ``_pykernels``."""
import math

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef struct Ctx:
    int n_nodes
    int m
    int cap
    int need_degree
    long *eu
    long *ev
    double *cost
    long *req
    long *deg
    long *x
    long *best_x
    long *last_start
    long *last_nodes
    long *parent
    double best


cdef int find(Ctx *c, int a):
    while c.parent[a] != a:
        c.parent[a] = c.parent[c.parent[a]]
        a = c.parent[a]
    return a


cdef bint connected(Ctx *c):
    cdef int i, e, root
    for i in range(c.n_nodes + 1):
        c.parent[i] = i
    for e in range(c.m):
        if c.x[e]:
            c.parent[find(c, c.eu[e])] = find(c, c.ev[e])
    root = find(c, 1)
    for i in range(1, c.n_nodes + 1):
        if (c.req[i] or c.deg[i]) and find(c, i) != root:
            return False
    return True


cdef void rec(Ctx *c, int e, double partial, int total):
    cdef int val, u, v, k, i
    cdef bint ok
    if partial >= c.best:
        return
    if e == c.m:
        if c.need_degree or total:
            if not connected(c):
                return
        c.best = partial
        for k in range(c.m):
            c.best_x[k] = c.x[k]
        return
    u = c.eu[e]
    v = c.ev[e]
    for val in range(3):
        if c.cap >= 0 and total + val > c.cap:
            break
        c.x[e] = val
        c.deg[u] += val
        c.deg[v] += val
        ok = True
        for k in range(c.last_start[e], c.last_start[e + 1]):
            i = c.last_nodes[k]
            if c.deg[i] % 2 or (c.need_degree and c.req[i] and c.deg[i] == 0):
                ok = False
                break
        if ok:
            rec(c, e + 1, partial + c.cost[e] * val, total + val)
        c.deg[u] -= val
        c.deg[v] -= val
    c.x[e] = 0


def min_edge_uses(int n_nodes, eu, ev, cost, required, int cap=-1):
    """Cheapest connected even ``x`` in ``{0,1,2}^E``; see ``_pykernels``."""
    cdef int m = len(eu)
    cdef cnp.ndarray[long, ndim=1] a_eu = np.ascontiguousarray(eu, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] a_ev = np.ascontiguousarray(ev, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] a_cost = np.ascontiguousarray(cost, dtype=np.float64)
    cdef cnp.ndarray[long, ndim=1] a_req = np.zeros(n_nodes + 1, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] a_deg = np.zeros(n_nodes + 1, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] a_x = np.zeros(max(m, 1), dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] a_best = np.zeros(max(m, 1), dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] a_parent = np.zeros(n_nodes + 1, dtype=np.int64)
    cdef Ctx c
    cdef int i, e
    req_set = set(int(i) for i in required)
    for i in req_set:
        a_req[i] = 1
    last_edge = [-1] * (n_nodes + 1)
    for e in range(m):
        last_edge[a_eu[e]] = e
        last_edge[a_ev[e]] = e
    groups = [[] for _ in range(m)]
    for i in range(1, n_nodes + 1):
        if last_edge[i] >= 0:
            groups[last_edge[i]].append(i)
        elif len(req_set) > 1 and a_req[i]:
            return math.inf, None
    starts = [0]
    flat = []
    for g in groups:
        flat.extend(g)
        starts.append(len(flat))
    cdef cnp.ndarray[long, ndim=1] a_start = np.asarray(starts, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] a_nodes = np.asarray(flat + [0], dtype=np.int64)

    c.n_nodes = n_nodes
    c.m = m
    c.cap = cap
    c.need_degree = len(req_set) > 1
    c.eu = &a_eu[0] if m else NULL
    c.ev = &a_ev[0] if m else NULL
    c.cost = &a_cost[0] if m else NULL
    c.req = &a_req[0]
    c.deg = &a_deg[0]
    c.x = &a_x[0]
    c.best_x = &a_best[0]
    c.last_start = &a_start[0]
    c.last_nodes = &a_nodes[0]
    c.parent = &a_parent[0]
    c.best = math.inf
    rec(&c, 0, 0.0, 0)
    if c.best == math.inf:
        return math.inf, None
    return c.best, [int(a_best[e]) for e in range(m)]
