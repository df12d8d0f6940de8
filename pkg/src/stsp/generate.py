"""Seeded instance generators: paths, grids, random sparse graphs and planar graphs."""
from __future__ import annotations

from typing import Iterable, List, Optional, Tuple

import numpy as np

from .instance import DEPOT, Instance, build_instance


def path_instance(n: int, required: Iterable[int] = (), cost: int = 1) -> Instance:
    """Path ``1 - 2 - ... - n`` with uniform edge cost."""
    edges = [(i, i + 1, cost) for i in range(1, n)]
    req = set(required) or {1, n}
    return build_instance(n, edges, req)


def grid_instance(rows: int, cols: int, n_required: int = 2, seed: int = 0,
                  cost_range: Tuple[int, int] = (1, 9), required: Optional[Iterable[int]] = None) -> Instance:
    """Grid graph with random integer costs; ``required`` overrides the random choice."""
    rng = np.random.default_rng(seed)
    node = lambda r, c: r * cols + c + 1  # noqa: E731
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((node(r, c), node(r, c + 1)))
            if r + 1 < rows:
                edges.append((node(r, c), node(r + 1, c)))
    if required is not None:
        costs = rng.integers(cost_range[0], cost_range[1] + 1, size=len(edges))
        return build_instance(rows * cols, [(i, j, int(c)) for (i, j), c in zip(edges, costs)],
                              set(required) | {DEPOT})
    return _finish(rows * cols, edges, n_required, rng, cost_range)


def grid_corners(rows: int, cols: int) -> List[int]:
    return sorted({1, cols, (rows - 1) * cols + 1, rows * cols})


def random_instance(seed: int, n_nodes: int = 8, n_edges: int = 11, n_required: Optional[int] = None,
                    cost_range: Tuple[int, int] = (1, 9)) -> Instance:
    """Connected random graph: a random spanning tree plus random extra edges."""
    rng = np.random.default_rng(seed)
    n_edges = max(n_nodes - 1, min(n_edges, n_nodes * (n_nodes - 1) // 2))
    order = list(rng.permutation(np.arange(2, n_nodes + 1)))
    tree_nodes = [DEPOT]
    edges = set()
    for v in order:
        u = tree_nodes[int(rng.integers(len(tree_nodes)))]
        edges.add((min(u, v), max(u, v)))
        tree_nodes.append(int(v))
    others = [(i, j) for i in range(1, n_nodes + 1) for j in range(i + 1, n_nodes + 1) if (i, j) not in edges]
    extra = n_edges - len(edges)
    if extra > 0:
        pick = rng.choice(len(others), size=extra, replace=False)
        edges.update(others[int(k)] for k in sorted(pick))
    if n_required is None:
        n_required = int(rng.integers(2, n_nodes + 1))
    return _finish(n_nodes, sorted(edges), n_required, rng, cost_range)


def planar_instance(n_nodes: int, n_required: int, seed: int = 0, n_edges: Optional[int] = None,
                    cost_range: Tuple[int, int] = (1, 9), required: Optional[Iterable[int]] = None) -> Instance:
    """Planar graph from a Delaunay triangulation of random points.

    With ``n_edges`` the triangulation is thinned to a random spanning tree
    plus random extra triangulation edges.  Costs are rounded lengths.
    """
    from scipy.spatial import Delaunay

    rng = np.random.default_rng(seed)
    pts = rng.random((n_nodes, 2))
    if n_nodes < 3:
        edges = {(1, 2)} if n_nodes == 2 else set()
    else:
        tri = Delaunay(pts)
        edges = set()
        for simplex in tri.simplices:
            for a in range(3):
                for b in range(a + 1, 3):
                    i, j = sorted((int(simplex[a]) + 1, int(simplex[b]) + 1))
                    edges.add((i, j))
    edges = sorted(edges)
    if n_edges is not None and n_edges < len(edges):
        edges = _thin(n_nodes, edges, max(n_edges, n_nodes - 1), rng)
    lo, hi = cost_range
    out = []
    for i, j in edges:
        d = float(np.linalg.norm(pts[i - 1] - pts[j - 1]))
        out.append((i, j, max(lo, min(hi, int(round(lo + d * (hi - lo)))))))
    if required is None:
        required = _pick_required(rng, n_nodes, n_required)
    return build_instance(n_nodes, out, set(required) | {DEPOT})


def _thin(n_nodes: int, edges: List[Tuple[int, int]], keep: int, rng) -> List[Tuple[int, int]]:
    # random spanning tree (Kruskal on a random order), then random extras
    parent = list(range(n_nodes + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = [edges[int(k)] for k in rng.permutation(len(edges))]
    tree, rest = [], []
    for i, j in order:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree.append((i, j))
        else:
            rest.append((i, j))
    return sorted(tree + rest[: keep - len(tree)])


def _pick_required(rng, n_nodes: int, n_required: int) -> List[int]:
    n_required = max(1, min(n_nodes, n_required))
    rest = rng.choice(np.arange(2, n_nodes + 1), size=n_required - 1, replace=False) if n_required > 1 else []
    return [DEPOT] + sorted(int(i) for i in rest)


def _finish(n_nodes, edges, n_required, rng, cost_range) -> Instance:
    lo, hi = cost_range
    costs = rng.integers(lo, hi + 1, size=len(edges))
    required = _pick_required(rng, n_nodes, n_required)
    return build_instance(n_nodes, [(i, j, int(c)) for (i, j), c in zip(edges, costs)], required)


def with_variant_data(inst: Instance, seed: int, budget_fraction: float = 0.5) -> Instance:
    """Attach revenues, demands, a budget and a capacity for SOP/SCPTP runs."""
    rng = np.random.default_rng(seed)
    customers = inst.customers
    revenue = {i: int(rng.integers(1, 21)) for i in customers}
    demand = {i: int(rng.integers(1, 6)) for i in customers}
    total_cost = sum(e.cost for e in inst.edges)
    budget = max(1, int(round(budget_fraction * 2 * total_cost * rng.uniform(0.3, 1.0))))
    capacity = max(1, int(round(sum(demand.values()) * rng.uniform(0.4, 1.0)))) if demand else 1
    return inst.replace(revenue=revenue, demand=demand, budget=budget, capacity=capacity)


def suite_instance(seed: int) -> Instance:
    """Member ``seed`` of the standard test suite: |V| in 5..8, |E| <= 11, integer costs."""
    rng = np.random.default_rng(10_000 + seed)
    n = int(rng.choice([5, 6, 7, 8, 8, 8]))
    m = int(rng.integers(n, min(11, n * (n - 1) // 2) + 1))
    return random_instance(seed, n, m, n_required=int(rng.integers(2, n + 1)))


def suite(count: int = 50):
    return [suite_instance(s) for s in range(count)]
