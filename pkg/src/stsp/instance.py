"""Sparse Steiner TSP instances.

An instance is an undirected simple graph on nodes ``1..n`` (node 1 is the
depot) with edge costs, optional traversal times, and a set of required
nodes.  Optional payloads carry the data needed by the orienteering,
profitable-tour and time-window variants.

The text format is line oriented::

    # comment
    nodes 3
    required 1 3
    edge 1 2 1
    edge 2 3 1 0.5        # optional traversal time
    service 3 1
    window 3 0 10
    horizon 10
    revenue 3 5
    demand 3 1
    budget 4
    capacity 2
"""
from __future__ import annotations

import dataclasses
import hashlib
import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

log = logging.getLogger(__name__)

DEPOT = 1

Number = float


class InstanceError(ValueError):
    """Raised for malformed or invalid instances."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class Edge(NamedTuple):
    u: int
    v: int
    cost: Number
    time: Optional[Number] = None

    @property
    def key(self) -> Tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


@dataclass(frozen=True)
class Instance:
    node_count: int
    edges: Tuple[Edge, ...]
    required: frozenset
    service: Mapping[int, Number] = field(default_factory=dict)
    windows: Mapping[int, Tuple[Number, Number]] = field(default_factory=dict)
    horizon: Optional[Number] = None
    revenue: Mapping[int, Number] = field(default_factory=dict)
    demand: Mapping[int, Number] = field(default_factory=dict)
    budget: Optional[Number] = None
    capacity: Optional[Number] = None
    # original label of each node when stray components were pruned
    labels: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        index = {}
        adj: Dict[int, List[Tuple[int, int]]] = {i: [] for i in self.nodes}
        for e, edge in enumerate(self.edges):
            index[edge.key] = e
            adj[edge.u].append((edge.v, e))
            adj[edge.v].append((edge.u, e))
        object.__setattr__(self, "_edge_index", index)
        object.__setattr__(self, "_adj", {i: tuple(v) for i, v in adj.items()})

    @property
    def nodes(self) -> range:
        return range(1, self.node_count + 1)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_id(self, u: int, v: int) -> int:
        return self._edge_index[(u, v) if u < v else (v, u)]

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edge_index

    def neighbors(self, i: int) -> Tuple[Tuple[int, int], ...]:
        """(neighbor, edge id) pairs of node ``i``."""
        return self._adj[i]

    @property
    def stsp_required(self) -> frozenset:
        """Required set for the plain STSP: the depot always counts."""
        return self.required | {DEPOT}

    @property
    def customers(self) -> Tuple[int, ...]:
        """Required nodes other than the depot, sorted."""
        return tuple(sorted(self.required - {DEPOT}))

    @property
    def integral(self) -> bool:
        return all(float(e.cost).is_integer() for e in self.edges)

    def cost_of(self, edge_uses: Mapping[int, int] | Sequence[int]) -> Number:
        if isinstance(edge_uses, Mapping):
            items = edge_uses.items()
        else:
            items = enumerate(edge_uses)
        return sum(self.edges[e].cost * k for e, k in items)

    def edge_time(self, e: int) -> Number:
        t = self.edges[e].time
        if t is None:
            raise InstanceError(f"edge {self.edges[e].u}-{self.edges[e].v} has no traversal time")
        return t

    def window(self, i: int) -> Tuple[Number, Number]:
        if i in self.windows:
            return self.windows[i]
        return (0, self.horizon if self.horizon is not None else math.inf)

    def fingerprint(self) -> str:
        return hashlib.sha1(format_instance(self).encode()).hexdigest()[:12]

    def with_required(self, required: Iterable[int]) -> "Instance":
        return _replace(self, required=frozenset(required))

    def replace(self, **changes) -> "Instance":
        return _replace(self, **changes)


def _replace(inst: Instance, **changes) -> Instance:
    return dataclasses.replace(inst, **changes)


class ArcSet(NamedTuple):
    """Directed expansion of the edge set: edge ``e`` gives arcs ``2e`` (u->v) and ``2e+1`` (v->u)."""

    arcs: Tuple[Tuple[int, int], ...]
    cost: Tuple[Number, ...]
    arc_edge: Tuple[int, ...]
    edge_arcs: Tuple[Tuple[int, int], ...]
    out_arcs: Mapping[int, Tuple[int, ...]]
    in_arcs: Mapping[int, Tuple[int, ...]]

    def __len__(self) -> int:
        return len(self.arcs)

    def reverse(self, a: int) -> int:
        return a ^ 1


@dataclass(frozen=True)
class RankVector:
    r: Mapping[int, int]

    def __getitem__(self, i: int) -> int:
        return self.r[i]


# ---------------------------------------------------------------------------
# parsing

_KEYWORDS = {
    "nodes", "required", "edge", "service", "window", "horizon",
    "revenue", "demand", "budget", "capacity",
}


def _number(tok: str, line: int, col: int) -> Number:
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        value = float(tok)
    except ValueError:
        raise InstanceError(f"expected a number, got {tok!r}", line, col) from None
    if not math.isfinite(value):
        raise InstanceError(f"non-finite number {tok!r}", line, col)
    return value


def _node(tok: str, line: int, col: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InstanceError(f"expected a node label, got {tok!r}", line, col) from None


def parse_instance(text: str, prune: bool = True) -> Instance:
    """Parse and validate an instance file."""
    n = None
    required: List[int] = []
    edges: List[Edge] = []
    edge_lines: List[int] = []
    service: Dict[int, Number] = {}
    windows: Dict[int, Tuple[Number, Number]] = {}
    revenue: Dict[int, Number] = {}
    demand: Dict[int, Number] = {}
    scalars: Dict[str, Number] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        toks = list(_tokens(body))
        if not toks:
            continue
        (kw, kcol), args = toks[0], toks[1:]
        if kw not in _KEYWORDS:
            raise InstanceError(f"unknown keyword {kw!r}", lineno, kcol)

        def arity(k, _args=args, _kw=kw, _col=kcol):
            if len(_args) != k:
                raise InstanceError(f"{_kw!r} takes {k} argument(s), got {len(_args)}", lineno, _col)

        if kw == "nodes":
            arity(1)
            n = _node(args[0][0], lineno, args[0][1])
            if n < 1:
                raise InstanceError("node count must be positive", lineno, args[0][1])
        elif kw == "required":
            required.extend(_node(t, lineno, c) for t, c in args)
        elif kw == "edge":
            if len(args) not in (3, 4):
                raise InstanceError("'edge' takes 3 or 4 arguments", lineno, kcol)
            u = _node(args[0][0], lineno, args[0][1])
            v = _node(args[1][0], lineno, args[1][1])
            cost = _number(args[2][0], lineno, args[2][1])
            time = _number(args[3][0], lineno, args[3][1]) if len(args) == 4 else None
            if cost < 0 or (time is not None and time < 0):
                col = args[2][1] if cost < 0 else args[3][1]
                raise InstanceError("negative weight", lineno, col)
            edges.append(Edge(u, v, cost, time))
            edge_lines.append(lineno)
        elif kw in ("service", "revenue", "demand"):
            arity(2)
            i = _node(args[0][0], lineno, args[0][1])
            value = _number(args[1][0], lineno, args[1][1])
            if value < 0:
                raise InstanceError(f"negative {kw}", lineno, args[1][1])
            {"service": service, "revenue": revenue, "demand": demand}[kw][i] = value
        elif kw == "window":
            arity(3)
            i = _node(args[0][0], lineno, args[0][1])
            a = _number(args[1][0], lineno, args[1][1])
            b = _number(args[2][0], lineno, args[2][1])
            if a < 0:
                raise InstanceError("negative window start", lineno, args[1][1])
            if a > b:
                raise InstanceError(f"window violation: a_{i} = {a} > b_{i} = {b}", lineno, args[1][1])
            windows[i] = (a, b)
        else:
            arity(1)
            value = _number(args[0][0], lineno, args[0][1])
            if value < 0:
                raise InstanceError(f"negative {kw}", lineno, args[0][1])
            scalars[kw] = value

    if n is None:
        raise InstanceError("missing 'nodes' line")
    for e, lineno in zip(edges, edge_lines):
        for x in (e.u, e.v):
            if not 1 <= x <= n:
                raise InstanceError(f"node {x} out of range 1..{n}", lineno)
    return build_instance(
        n, edges, required, service=service, windows=windows, horizon=scalars.get("horizon"),
        revenue=revenue, demand=demand, budget=scalars.get("budget"),
        capacity=scalars.get("capacity"), prune=prune,
    )


def _tokens(body: str):
    col = 0
    for tok in body.split():
        col = body.index(tok, col)
        yield tok, col + 1
        col += len(tok)


def build_instance(
    n: int,
    edges: Iterable[Edge | Tuple],
    required: Iterable[int],
    *,
    service: Optional[Mapping[int, Number]] = None,
    windows: Optional[Mapping[int, Tuple[Number, Number]]] = None,
    horizon: Optional[Number] = None,
    revenue: Optional[Mapping[int, Number]] = None,
    demand: Optional[Mapping[int, Number]] = None,
    budget: Optional[Number] = None,
    capacity: Optional[Number] = None,
    prune: bool = True,
) -> Instance:
    """Validate raw data and return an :class:`Instance`.

    Components that contain neither the depot nor a required node are
    dropped (with a warning) and the remaining nodes are relabelled in
    order; the original labels are kept in ``Instance.labels``.
    """
    edges = [Edge(*e) for e in edges]
    required = frozenset(required)
    service = dict(service or {})
    windows = dict(windows or {})
    revenue = dict(revenue or {})
    demand = dict(demand or {})

    seen = set()
    for e in edges:
        if e.u == e.v:
            raise InstanceError(f"self-loop at node {e.u}")
        if not (1 <= e.u <= n and 1 <= e.v <= n):
            raise InstanceError(f"edge {e.u}-{e.v} references a node outside 1..{n}")
        if e.cost < 0 or (e.time is not None and e.time < 0):
            raise InstanceError(f"negative weight on edge {e.u}-{e.v}")
        if e.key in seen:
            raise InstanceError(f"parallel edge {e.u}-{e.v}")
        seen.add(e.key)
    for i in itertools.chain(required, service, windows, revenue, demand):
        if not 1 <= i <= n:
            raise InstanceError(f"node {i} out of range 1..{n}")
    for i, (a, b) in windows.items():
        if a > b:
            raise InstanceError(f"window violation: a_{i} = {a} > b_{i} = {b}")
        if horizon is not None and b > horizon:
            raise InstanceError(f"window violation: b_{i} = {b} exceeds horizon {horizon}")

    comp = _components(n, edges)
    depot_comp = comp[DEPOT]
    stray_required = sorted(i for i in required if comp[i] != depot_comp)
    if stray_required:
        raise InstanceError(
            f"disconnected required component: node(s) {stray_required} unreachable from the depot"
        )

    labels = None
    keep = [i for i in range(1, n + 1) if comp[i] == depot_comp]
    if len(keep) < n:
        if not prune:
            raise InstanceError(f"nodes {sorted(set(range(1, n + 1)) - set(keep))} unreachable from the depot")
        dropped = sorted(set(range(1, n + 1)) - set(keep))
        log.warning("pruning %d node(s) not connected to the depot: %s", len(dropped), dropped)
        relabel = {old: new for new, old in enumerate(keep, start=1)}
        edges = [Edge(relabel[e.u], relabel[e.v], e.cost, e.time) for e in edges if e.u in relabel]
        required = frozenset(relabel[i] for i in required)
        service = {relabel[i]: v for i, v in service.items() if i in relabel}
        windows = {relabel[i]: v for i, v in windows.items() if i in relabel}
        revenue = {relabel[i]: v for i, v in revenue.items() if i in relabel}
        demand = {relabel[i]: v for i, v in demand.items() if i in relabel}
        labels = tuple(keep)
        n = len(keep)

    return Instance(
        node_count=n, edges=tuple(edges), required=required, service=service, windows=windows,
        horizon=horizon, revenue=revenue, demand=demand, budget=budget, capacity=capacity,
        labels=labels,
    )


def _components(n: int, edges: Sequence[Edge]) -> Dict[int, int]:
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        ru, rv = find(e.u), find(e.v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return {i: find(i) for i in range(1, n + 1)}


def _fmt(x: Number) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def format_instance(inst: Instance) -> str:
    """Inverse of :func:`parse_instance` (canonical ordering)."""
    out = [f"nodes {inst.node_count}"]
    if inst.required:
        out.append("required " + " ".join(str(i) for i in sorted(inst.required)))
    for e in inst.edges:
        line = f"edge {e.u} {e.v} {_fmt(e.cost)}"
        if e.time is not None:
            line += f" {_fmt(e.time)}"
        out.append(line)
    for i in sorted(inst.service):
        out.append(f"service {i} {_fmt(inst.service[i])}")
    for i in sorted(inst.windows):
        a, b = inst.windows[i]
        out.append(f"window {i} {_fmt(a)} {_fmt(b)}")
    if inst.horizon is not None:
        out.append(f"horizon {_fmt(inst.horizon)}")
    for i in sorted(inst.revenue):
        out.append(f"revenue {i} {_fmt(inst.revenue[i])}")
    for i in sorted(inst.demand):
        out.append(f"demand {i} {_fmt(inst.demand[i])}")
    if inst.budget is not None:
        out.append(f"budget {_fmt(inst.budget)}")
    if inst.capacity is not None:
        out.append(f"capacity {_fmt(inst.capacity)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# graph services

def arc_expand(inst: Instance) -> ArcSet:
    arcs, cost, arc_edge = [], [], []
    out_arcs: Dict[int, List[int]] = {i: [] for i in inst.nodes}
    in_arcs: Dict[int, List[int]] = {i: [] for i in inst.nodes}
    for e, edge in enumerate(inst.edges):
        for a, (i, j) in enumerate(((edge.u, edge.v), (edge.v, edge.u)), start=2 * e):
            arcs.append((i, j))
            cost.append(edge.cost)
            arc_edge.append(e)
            out_arcs[i].append(a)
            in_arcs[j].append(a)
    return ArcSet(
        arcs=tuple(arcs),
        cost=tuple(cost),
        arc_edge=tuple(arc_edge),
        edge_arcs=tuple((2 * e, 2 * e + 1) for e in range(len(inst.edges))),
        out_arcs={i: tuple(v) for i, v in out_arcs.items()},
        in_arcs={i: tuple(v) for i, v in in_arcs.items()},
    )


def _dijkstra(inst: Instance, source: int, weight: str):
    if weight == "cost":
        w = lambda e, head: inst.edges[e].cost  # noqa: E731
    elif weight == "time":
        w = lambda e, head: inst.edge_time(e)  # noqa: E731
    elif weight in ("required", "required-count"):
        counted = inst.required - {DEPOT}
        w = lambda e, head: 1 if head in counted else 0  # noqa: E731
    else:
        raise ValueError(f"unknown weight {weight!r}")
    dist = {i: math.inf for i in inst.nodes}
    pred: Dict[int, Optional[int]] = {i: None for i in inst.nodes}
    dist[source] = 0
    heap = [(0, source)]
    done = set()
    while heap:
        d, i = heapq.heappop(heap)
        if i in done:
            continue
        done.add(i)
        for j, e in inst.neighbors(i):
            nd = d + w(e, j)
            if nd < dist[j]:
                dist[j] = nd
                pred[j] = i
                heapq.heappush(heap, (nd, j))
    return dist, pred


def shortest_paths(inst: Instance, source: int, weight: str = "cost") -> Dict[int, Number]:
    """Single-source shortest distances; unreachable nodes map to ``math.inf``.

    ``weight`` is ``"cost"``, ``"time"`` or ``"required"``; the latter charges
    1 for entering a required non-depot node and 0 otherwise.
    """
    return _dijkstra(inst, source, weight)[0]


def compute_ranks(inst: Instance) -> RankVector:
    """Minimum number of required non-depot nodes seen on leaving each node.

    A required node counts itself.
    """
    dist = shortest_paths(inst, DEPOT, "required")
    unreachable = [i for i, d in dist.items() if math.isinf(d)]
    if unreachable:
        raise InstanceError(f"nodes {unreachable} unreachable from the depot")
    r = {i: int(d) for i, d in dist.items()}
    r[DEPOT] = 0
    return RankVector(r)


@dataclass(frozen=True)
class TspInstance:
    """Complete graph over the required nodes with shortest-path costs."""

    nodes: Tuple[int, ...]
    cost: Mapping[Tuple[int, int], Number]
    paths: Mapping[Tuple[int, int], Tuple[int, ...]]

    def tour_cost(self, tour: Sequence[int]) -> Number:
        return sum(self.cost[a, b] for a, b in zip(tour, tour[1:]))

    def optimal_tour(self) -> Tuple[Number, Tuple[int, ...]]:
        """Held-Karp dynamic program; the tour starts and ends at the depot."""
        others = [i for i in self.nodes if i != DEPOT]
        if not others:
            return 0, (DEPOT,)
        k = len(others)
        best: Dict[Tuple[int, int], Tuple[Number, int]] = {}
        for j in range(k):
            best[1 << j, j] = (self.cost[DEPOT, others[j]], -1)
        for mask in range(1, 1 << k):
            for j in range(k):
                if not mask >> j & 1 or (mask, j) not in best:
                    continue
                base = best[mask, j][0]
                for t in range(k):
                    if mask >> t & 1:
                        continue
                    cand = base + self.cost[others[j], others[t]]
                    key = (mask | 1 << t, t)
                    if key not in best or cand < best[key][0]:
                        best[key] = (cand, j)
        full = (1 << k) - 1
        value, last = min((best[full, j][0] + self.cost[others[j], DEPOT], j) for j in range(k))
        order = []
        mask, j = full, last
        while j != -1:
            order.append(others[j])
            mask, j = mask ^ (1 << j), best[mask, j][1]
        return value, (DEPOT, *reversed(order), DEPOT)

    def expand(self, tour: Sequence[int]) -> List[int]:
        """Node sequence in the sparse graph realising ``tour``."""
        walk = [tour[0]]
        for a, b in zip(tour, tour[1:]):
            walk.extend(self.paths[a, b][1:])
        return walk


def convert_to_tsp(inst: Instance) -> TspInstance:
    nodes = tuple(sorted(inst.stsp_required))
    cost, paths = {}, {}
    for s in nodes:
        dist, pred = _dijkstra(inst, s, "cost")
        for t in nodes:
            if t == s:
                continue
            if math.isinf(dist[t]):
                raise InstanceError(f"required nodes {s} and {t} are disconnected")
            path = [t]
            while path[-1] != s:
                path.append(pred[path[-1]])
            cost[s, t] = dist[t]
            paths[s, t] = tuple(reversed(path))
    return TspInstance(nodes=nodes, cost=cost, paths=paths)


def walk_edge_uses(inst: Instance, walk: Sequence[int]) -> Dict[int, int]:
    uses: Dict[int, int] = {}
    for a, b in zip(walk, walk[1:]):
        e = inst.edge_id(a, b)
        uses[e] = uses.get(e, 0) + 1
    return uses
