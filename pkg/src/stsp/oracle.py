"""Exact reference solvers and walk verification for small instances.

The STSP oracle enumerates edge-use vectors in ``{0,1,2}^E``; no edge of an
optimal walk needs more than one traversal per direction, so nothing is
lost.  The variant oracle loops over the customers it chooses to serve and
reuses the STSP oracle.  The time-window oracle cannot rely on that bound
and searches timed walks directly.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from . import kernels
from .instance import DEPOT, Instance, InstanceError, walk_edge_uses

log = logging.getLogger(__name__)

MAX_EDGES = 14
MAX_VARIANT_REQUIRED = 8
MAX_VARIANT_EDGES = 12
MAX_TW_TRAVERSALS = 20

STSP, SOP, SCPTP, STSPTW = "STSP", "SOP", "SCPTP", "STSPTW"


class OracleError(RuntimeError):
    pass


class Service(NamedTuple):
    """Service of ``node`` starting at ``start``, right after walk arc ``step``."""

    step: int
    node: int
    start: float


@dataclass
class WalkSolution:
    edge_uses: Tuple[int, ...]
    walk: List[Tuple[int, int]]
    cost: float
    selected: frozenset = frozenset()
    objective: Optional[float] = None
    schedule: List[Service] = field(default_factory=list)

    @property
    def traversals(self) -> int:
        return sum(self.edge_uses)

    @property
    def service_order(self) -> Tuple[int, ...]:
        return tuple(s.node for s in self.schedule)


# ---------------------------------------------------------------------------
# Eulerian walks

def eulerian_walk(inst: Instance, edge_uses: Sequence[int], start: int = DEPOT) -> List[Tuple[int, int]]:
    """Closed walk from ``start`` using edge ``e`` exactly ``edge_uses[e]`` times.

    Hierholzer's algorithm; neighbours are taken in increasing order so the
    result is deterministic.  Raises ``ValueError`` on odd degrees or a
    support that is disconnected or misses ``start``.
    """
    remaining = [int(k) for k in edge_uses]
    if any(k < 0 for k in remaining):
        raise ValueError("negative edge use")
    deg = {i: 0 for i in inst.nodes}
    for e, k in enumerate(remaining):
        deg[inst.edges[e].u] += k
        deg[inst.edges[e].v] += k
    odd = [i for i, d in deg.items() if d % 2]
    if odd:
        raise ValueError(f"odd degree at nodes {odd}")
    if not any(remaining):
        return []
    if deg[start] == 0:
        raise ValueError(f"walk support misses node {start}")
    adj = {i: sorted(inst.neighbors(i)) for i in inst.nodes}
    pos = {i: 0 for i in inst.nodes}
    stack = [start]
    circuit: List[int] = []
    while stack:
        i = stack[-1]
        while pos[i] < len(adj[i]) and remaining[adj[i][pos[i]][1]] == 0:
            pos[i] += 1
        if pos[i] == len(adj[i]):
            circuit.append(stack.pop())
        else:
            j, e = adj[i][pos[i]]
            remaining[e] -= 1
            stack.append(j)
    if any(remaining):
        raise ValueError("edge-use support is disconnected")
    circuit.reverse()
    return list(zip(circuit, circuit[1:]))


def _walk_solution(inst: Instance, x: Sequence[int], **extra) -> WalkSolution:
    walk = eulerian_walk(inst, x)
    return WalkSolution(tuple(int(k) for k in x), walk, inst.cost_of(list(x)), **extra)


# ---------------------------------------------------------------------------
# STSP

def brute_force_stsp(inst: Instance, max_traversals: Optional[int] = None,
                     required: Optional[frozenset] = None) -> WalkSolution:
    """Optimal closed walk by enumeration of ``{0,1,2}^E``.

    ``max_traversals`` restricts the search to ``sum(x) <= max_traversals``;
    ``required`` overrides the instance's required set.  Ties go to the
    lexicographically smallest ``x``.
    """
    if inst.edge_count > MAX_EDGES:
        raise OracleError(f"|E| = {inst.edge_count} exceeds the oracle guard {MAX_EDGES}")
    req = (inst.stsp_required if required is None else frozenset(required)) | {DEPOT}
    eu = [e.u for e in inst.edges]
    ev = [e.v for e in inst.edges]
    cost = [float(e.cost) for e in inst.edges]
    cap = -1 if max_traversals is None else int(max_traversals)
    value, x = kernels.min_edge_uses(inst.node_count, eu, ev, cost, sorted(req), cap)
    if x is None:
        raise OracleError("no feasible walk covers the required nodes")
    return _walk_solution(inst, x)


# ---------------------------------------------------------------------------
# SOP and SCPTP

def _require(inst: Instance, variant: str) -> None:
    missing = []
    customers = inst.customers
    if any(i not in inst.revenue for i in customers):
        missing.append("revenue")
    if variant == SOP and inst.budget is None:
        missing.append("budget")
    if variant == SCPTP:
        if inst.capacity is None:
            missing.append("capacity")
        if any(i not in inst.demand for i in customers):
            missing.append("demand")
    if missing:
        raise InstanceError(f"{variant} instance lacks {', '.join(missing)}")


def variant_objective(inst: Instance, variant: str, selected, cost: float) -> float:
    prize = sum(inst.revenue[i] for i in selected)
    return prize - cost if variant == SCPTP else prize


def brute_force_variant(inst: Instance, variant: str) -> WalkSolution:
    """Best customer subset for SOP (max prize within budget) or SCPTP (max profit within capacity).

    Each subset is solved exactly as a Steiner TSP; the first subset in
    bitmask order with a strictly better objective wins.
    """
    variant = variant.upper()
    if variant not in (SOP, SCPTP):
        raise ValueError(f"unknown variant {variant!r}")
    _require(inst, variant)
    customers = inst.customers
    if len(customers) > MAX_VARIANT_REQUIRED or inst.edge_count > MAX_VARIANT_EDGES:
        raise OracleError("instance exceeds the variant oracle guard")
    best: Optional[WalkSolution] = None
    for mask in range(1 << len(customers)):
        chosen = frozenset(c for b, c in enumerate(customers) if mask >> b & 1)
        if variant == SCPTP and sum(inst.demand[i] for i in chosen) > inst.capacity:
            continue
        try:
            sol = brute_force_stsp(inst, required=chosen | {DEPOT})
        except OracleError:
            continue
        if variant == SOP and sol.cost > inst.budget:
            continue
        value = variant_objective(inst, variant, chosen, sol.cost)
        if best is None or value > best.objective:
            sol.selected = chosen
            sol.objective = value
            best = sol
    assert best is not None  # the empty selection is always feasible
    return best


# ---------------------------------------------------------------------------
# STSPTW

class _Label(NamedTuple):
    cost: float
    steps: int
    clock: float
    node: int
    served: int
    seq: int


def tw_traversal_bound(inst: Instance) -> int:
    return (len(inst.customers) + 1) * (inst.node_count - 1)


def brute_force_stsptw(inst: Instance, max_traversals: Optional[int] = None) -> WalkSolution:
    """Cheapest timed closed walk serving every customer inside its window.

    Labels ``(node, served set)`` are expanded in order of cost; a label is
    dropped when an earlier one at the same node and served set has no
    later clock and no more traversals.  Walks are limited to
    ``(n_R + 1)(|V| - 1)`` traversals unless ``max_traversals`` is given.
    """
    if inst.horizon is None:
        raise InstanceError("time-window instance needs a horizon")
    for e in range(inst.edge_count):
        inst.edge_time(e)
    limit = tw_traversal_bound(inst) if max_traversals is None else max_traversals
    if max_traversals is None and limit > MAX_TW_TRAVERSALS:
        raise OracleError(f"traversal bound {limit} exceeds the oracle guard {MAX_TW_TRAVERSALS}")
    customers = inst.customers
    bit = {c: 1 << b for b, c in enumerate(customers)}
    full = (1 << len(customers)) - 1
    T = inst.horizon
    for c in customers:
        a, b = inst.window(c)
        if a + inst.service.get(c, 0) > T:
            raise InstanceError(f"window of node {c} cannot be met before the horizon")

    counter = itertools.count()
    parent: Dict[int, Tuple[Optional[int], Optional[Tuple[int, int]], Optional[Service]]] = {}
    settled: Dict[Tuple[int, int], List[Tuple[float, int]]] = {}
    heap: List[_Label] = []

    def push(cost, steps, clock, node, served, par, arc, service):
        seq = next(counter)
        parent[seq] = (par, arc, service)
        heapq.heappush(heap, _Label(cost, steps, clock, node, served, seq))

    push(0, 0, 0, DEPOT, 0, None, None, None)
    while heap:
        lab = heapq.heappop(heap)
        key = (lab.node, lab.served)
        front = settled.setdefault(key, [])
        if any(c <= lab.clock and s <= lab.steps for c, s in front):
            continue
        front.append((lab.clock, lab.steps))
        if lab.node == DEPOT and lab.served == full:
            return _tw_solution(inst, parent, lab)
        # serve the current node
        if lab.node in bit and not lab.served & bit[lab.node]:
            a, b = inst.window(lab.node)
            start = max(lab.clock, a)
            finish = start + inst.service.get(lab.node, 0)
            if start <= b and finish <= T:
                svc = Service(lab.steps - 1, lab.node, start)
                push(lab.cost, lab.steps, finish, lab.node, lab.served | bit[lab.node], lab.seq, None, svc)
        if lab.steps >= limit:
            continue
        for j, e in sorted(inst.neighbors(lab.node)):
            clock = lab.clock + inst.edge_time(e)
            if clock > T:
                continue
            push(lab.cost + inst.edges[e].cost, lab.steps + 1, clock, j, lab.served, lab.seq, (lab.node, j), None)
    raise OracleError("no feasible time-window schedule")


def _tw_solution(inst: Instance, parent, lab: _Label) -> WalkSolution:
    walk: List[Tuple[int, int]] = []
    schedule: List[Service] = []
    seq: Optional[int] = lab.seq
    while seq is not None:
        par, arc, svc = parent[seq]
        if arc is not None:
            walk.append(arc)
        if svc is not None:
            schedule.append(svc)
        seq = par
    walk.reverse()
    schedule.reverse()
    uses = walk_edge_uses(inst, [DEPOT] + [j for _, j in walk]) if walk else {}
    x = tuple(int(uses.get(e, 0)) for e in range(inst.edge_count))
    return WalkSolution(x, walk, lab.cost, frozenset(inst.customers), lab.cost, schedule)


# ---------------------------------------------------------------------------
# verification

@dataclass
class VerifyReport:
    ok: bool
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def first(self) -> Optional[str]:
        return self.failures[0][0] if self.failures else None

    def __bool__(self) -> bool:
        return self.ok


def verify_walk(inst: Instance, sol: WalkSolution, variant: str = STSP, tol: float = 1e-9) -> VerifyReport:
    """Check a walk solution against the instance; failures are ``(kind, message)`` pairs.

    Kinds: ``closed``, ``edges``, ``uses``, ``cost``, ``coverage``,
    ``budget``, ``capacity``, ``window``, ``horizon``, ``service``.
    """
    variant = variant.upper()
    fails: List[Tuple[str, str]] = []
    walk = list(sol.walk)
    if walk:
        if walk[0][0] != DEPOT or walk[-1][1] != DEPOT:
            fails.append(("closed", "walk does not start and end at the depot"))
        for (a, b), (c, d) in zip(walk, walk[1:]):
            if b != c:
                fails.append(("closed", f"arc ({a},{b}) is not followed by an arc out of {b}"))
                break
    bad = [arc for arc in walk if not inst.has_edge(*arc)]
    if bad:
        fails.append(("edges", f"arcs {bad} are not graph edges"))
        return VerifyReport(False, fails)
    uses = [0] * inst.edge_count
    for i, j in walk:
        uses[inst.edge_id(i, j)] += 1
    if tuple(uses) != tuple(sol.edge_uses):
        fails.append(("uses", "walk does not realize the stated edge uses"))
    cost = inst.cost_of(uses)
    if abs(cost - sol.cost) > tol * max(1.0, abs(cost)):
        fails.append(("cost", f"stated cost {sol.cost} but walk costs {cost}"))
    visited = {DEPOT} | {j for _, j in walk}

    if variant == STSP:
        must = inst.stsp_required
    elif variant in (SOP, SCPTP):
        must = frozenset(sol.selected) | {DEPOT}
        if not set(sol.selected) <= set(inst.customers):
            fails.append(("coverage", "selected nodes are not customers"))
    else:
        must = inst.stsp_required
    missing = sorted(must - visited)
    if missing:
        fails.append(("coverage", f"required nodes {missing} not visited"))

    if variant == SOP and inst.budget is not None and cost > inst.budget + tol:
        fails.append(("budget", f"cost {cost} exceeds budget {inst.budget}"))
    if variant == SCPTP and inst.capacity is not None:
        load = sum(inst.demand.get(i, 0) for i in sol.selected)
        if load > inst.capacity + tol:
            fails.append(("capacity", f"load {load} exceeds capacity {inst.capacity}"))
    if variant in (SOP, SCPTP) and sol.objective is not None:
        value = variant_objective(inst, variant, sol.selected, cost)
        if abs(value - sol.objective) > tol * max(1.0, abs(value)):
            fails.append(("cost", f"stated objective {sol.objective} but selection yields {value}"))
    if variant == STSPTW:
        fails.extend(_check_schedule(inst, walk, sol.schedule, tol))
    return VerifyReport(not fails, fails)


def _check_schedule(inst: Instance, walk, schedule: Sequence[Service], tol: float):
    fails = []
    served = [s.node for s in schedule]
    customers = set(inst.customers)
    if sorted(served) != sorted(customers):
        fails.append(("service", f"served {served} but customers are {sorted(customers)}"))
    by_step: Dict[int, List[Service]] = {}
    for s in schedule:
        by_step.setdefault(s.step, []).append(s)
    clock = 0.0
    for s in by_step.get(-1, []):
        fails.append(("service", f"node {s.node} served before leaving the depot"))
    for k, (i, j) in enumerate(walk):
        clock += inst.edge_time(inst.edge_id(i, j))
        for s in by_step.get(k, []):
            a, b = inst.window(s.node)
            if s.node != j:
                fails.append(("service", f"node {s.node} served while at {j}"))
            if s.start < clock - tol:
                fails.append(("window", f"service at {s.node} starts at {s.start} before arrival {clock}"))
            if s.start < a - tol or s.start > b + tol:
                fails.append(("window", f"service at {s.node} starts at {s.start} outside [{a}, {b}]"))
            clock = max(clock, s.start) + inst.service.get(s.node, 0)
    if inst.horizon is not None and clock > inst.horizon + tol:
        fails.append(("horizon", f"return at {clock} after {inst.horizon}"))
    return fails


# ---------------------------------------------------------------------------
# cycle removal

def removable_cycle(inst: Instance, edge_uses: Sequence[int]) -> Optional[List[int]]:
    """A cycle (as edge ids, repeats allowed for doubled edges) whose removal keeps the multigraph connected.

    The multigraph has ``edge_uses[e]`` copies of edge ``e``.  Returns ``None``
    when no such cycle exists; on ``k`` touched nodes one always does once
    there are more than ``2(k-1)`` edge copies.
    """
    x = [int(k) for k in edge_uses]
    touched = {i for e, k in enumerate(x) if k for i in (inst.edges[e].u, inst.edges[e].v)}
    # a doubled edge is a 2-cycle; removing both copies keeps connectivity iff
    # the edge is not a bridge of the remaining support
    candidates: List[List[int]] = []
    for e, k in enumerate(x):
        if k >= 2:
            candidates.append([e, e])
    candidates.extend(_simple_cycles(inst, [e for e, k in enumerate(x) if k]))
    for cyc in candidates:
        y = list(x)
        for e in cyc:
            y[e] -= 1
        if _connected_on(inst, y, touched):
            return cyc
    return None


def _connected_on(inst: Instance, x: Sequence[int], nodes) -> bool:
    if not nodes:
        return True
    adj: Dict[int, List[int]] = {i: [] for i in nodes}
    for e, k in enumerate(x):
        if k:
            u, v = inst.edges[e].u, inst.edges[e].v
            adj[u].append(v)
            adj[v].append(u)
    start = next(iter(sorted(nodes)))
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen >= set(nodes)


def _simple_cycles(inst: Instance, support: Sequence[int]) -> List[List[int]]:
    """Simple cycles of the support graph, each as a list of edge ids."""
    adj: Dict[int, List[Tuple[int, int]]] = {}
    for e in support:
        u, v = inst.edges[e].u, inst.edges[e].v
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    cycles: List[List[int]] = []
    seen = set()

    def dfs(start, node, path_nodes, path_edges):
        for j, e in adj[node]:
            if path_edges and e == path_edges[-1]:
                continue
            if j == start and len(path_edges) >= 2:
                key = frozenset(path_edges + [e])
                if key not in seen:
                    seen.add(key)
                    cycles.append(path_edges + [e])
            elif j > start and j not in path_nodes:
                dfs(start, j, path_nodes | {j}, path_edges + [e])

    for s in sorted(adj):
        dfs(s, s, {s}, [])
    return cycles
