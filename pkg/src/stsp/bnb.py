"""LP-based branch and bound with optional cut separation.

Nodes are explored by depth-first dives; when a dive ends the open node
with the best bound is resumed.  A separation callback, when given, is
consulted at the root until no more cuts are returned, on every integral
LP solution (so lazily enforced constraint families stay exact), and at
fractional nodes whose bound is within 10% of the incumbent.  Cuts are
global.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .instance import DEPOT, Instance
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, SimplexState, constraint_rows
from .milp import EPS_GAP, EPS_INT, MAX, Constraint, MilpModel

log = logging.getLogger(__name__)

BUDGET_EXHAUSTED = "budget-exhausted"
EPS_CUT = 1e-6

SeparationCallback = Callable[[np.ndarray], List[Constraint]]


@dataclass
class MilpSolution:
    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    bound: float
    node_count: int = 0
    cuts_added: int = 0
    root_bound: Optional[float] = None
    names: Sequence[str] = field(default=(), repr=False)
    bound_history: List[float] = field(default_factory=list, repr=False)
    cuts: List[Constraint] = field(default_factory=list, repr=False)

    @property
    def incumbent(self) -> Dict[str, float]:
        if self.x is None:
            return {}
        return {n: float(v) for n, v in zip(self.names, self.x)}

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _objective_is_integral(model: MilpModel) -> bool:
    return all(
        float(c).is_integer() and model.variables[j].is_integer for j, c in model.objective.items()
    )


def solve_milp(
    model: MilpModel,
    sep: Optional[SeparationCallback] = None,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
) -> MilpSolution:
    """Solve ``model`` to optimality or until a budget runs out."""
    start = time.perf_counter()
    sense = -1.0 if model.sense == MAX else 1.0
    int_idx = np.array(model.integer_indices, dtype=int)
    integral_obj = _objective_is_integral(model)
    names = model.var_names

    state = SimplexState.from_model(model)
    lo0 = state.lo[: state.n].copy()
    hi0 = state.hi[: state.n].copy()
    # integer variables get integral bounds
    if len(int_idx):
        lo0[int_idx] = np.ceil(lo0[int_idx] - EPS_INT)
        hi0[int_idx] = np.floor(hi0[int_idx] + EPS_INT)
        state.set_all_bounds(lo0, hi0)

    cuts: List[Constraint] = []
    incumbent: Optional[np.ndarray] = None
    best = math.inf  # minimisation form
    nodes = 0
    # open nodes: (parent bound, seq, lo, hi, depth, basis snapshot)
    heap: List = []
    counter = itertools.count()
    history: List[float] = []
    root_bound = None

    def prunable(bound: float) -> bool:
        if incumbent is None:
            return False
        if integral_obj:
            return math.ceil(bound - 1e-6) >= best - 1e-9
        return bound >= best - EPS_GAP * max(1.0, abs(best))

    def close_to_incumbent(bound: float) -> bool:
        return incumbent is not None and best - bound <= 0.1 * abs(best)

    def global_bound(current: float) -> float:
        b = min([current] + [item[0] for item in heap])
        if incumbent is not None:
            b = min(b, best)
        return b

    def finish(status: str) -> MilpSolution:
        obj = None if incumbent is None else float(sense * best) + 0.0
        if status == OPTIMAL:
            bound = obj
        else:
            bound = sense * max(history) if history else (-sense * math.inf)
        return MilpSolution(status, incumbent, obj, bound, nodes, len(cuts), root_bound,
                            names, [sense * b for b in history], list(cuts))

    # One LP state serves every node.  A dive continues from the parent's
    # basis; a node taken from the heap restarts from the basis its parent
    # had, which is usually a few dual pivots away.
    dive = (lo0, hi0, -math.inf, 0)
    while dive is not None or heap:
        if (node_limit is not None and nodes >= node_limit) or \
                (time_limit is not None and time.perf_counter() - start > time_limit):
            pending = dive[2] if dive is not None else math.inf
            history.append(max(history[-1] if history else -math.inf, global_bound(pending)))
            return finish(BUDGET_EXHAUSTED)
        if dive is not None:
            lo, hi, parent_bound, depth = dive
            dive = None
        else:
            parent_bound, _, lo, hi, depth, snap = heapq.heappop(heap)
            if prunable(parent_bound):
                continue
            state.restore(snap)
        history.append(max(history[-1] if history else -math.inf, global_bound(parent_bound)))
        nodes += 1
        state.set_all_bounds(lo, hi)

        while True:
            sol = state.optimize()
            if sol.status == UNBOUNDED:
                if nodes == 1:
                    return MilpSolution(UNBOUNDED, None, None, -sense * math.inf, nodes, len(cuts),
                                        None, names)
                sol = None
                break
            if sol.status != OPTIMAL:
                if sol.status != INFEASIBLE:
                    log.warning("node LP ended with status %s; pruning", sol.status)
                    state.refactor()
                sol = None
                break
            bound = float(state.c[: state.n] @ sol.x)
            if prunable(bound):
                sol = None
                break
            x = sol.x
            frac = np.abs(x[int_idx] - np.round(x[int_idx])) if len(int_idx) else np.zeros(0)
            integral = not (frac > EPS_INT).any()
            if sep is not None and (integral or depth == 0 or close_to_incumbent(bound)):
                xs = x.copy()
                if integral and len(int_idx):
                    xs[int_idx] = np.round(xs[int_idx])
                new = [c for c in sep(xs) if c.violation(xs) > EPS_CUT]
                if new:
                    new = [Constraint(f"cut{len(cuts) + k}", c.row, c.sense, c.rhs) for k, c in enumerate(new)]
                    cuts.extend(new)
                    rows, rlo, rhi = constraint_rows(state, new)
                    state.add_rows(rows, rlo, rhi, [c.name for c in new])
                    continue
            break

        if sol is None:
            continue
        if depth == 0:
            root_bound = sense * bound
        if integral:
            xr = x.copy()
            if len(int_idx):
                xr[int_idx] = np.round(xr[int_idx])
            value = float(state.c[: state.n] @ xr)
            if value < best - 1e-9:
                best, incumbent = value, xr
                log.debug("incumbent %.6g after %d nodes", sense * best, nodes)
                heap = [item for item in heap if not prunable(item[0])]
                heapq.heapify(heap)
            continue

        if incumbent is not None and len(int_idx):
            lo, hi = _reduced_cost_fixing(state, int_idx, lo, hi, bound, best, integral_obj)

        # most fractional variable, lowest index on ties
        dist = np.abs(frac - 0.5)
        k = int(np.flatnonzero(dist <= dist.min() + 1e-12)[0])
        j = int(int_idx[k])
        v = x[j]
        down_hi = hi.copy()
        down_hi[j] = math.floor(v)
        up_lo = lo.copy()
        up_lo[j] = math.ceil(v)
        children = [(lo, down_hi), (up_lo, hi)]
        if v - math.floor(v) >= 0.5:
            children.reverse()
        (lo1, hi1), (lo2, hi2) = children
        heapq.heappush(heap, (bound, next(counter), lo2, hi2, depth + 1, state.snapshot()))
        dive = (lo1, hi1, bound, depth + 1)

    if incumbent is None:
        return finish(INFEASIBLE)
    history.append(best)
    return finish(OPTIMAL)


def _reduced_cost_fixing(state: SimplexState, int_idx: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                         bound: float, best: float, integral_obj: bool):
    """Tighten integer bounds that cannot move without passing the incumbent.

    A nonbasic variable at its lower bound with reduced cost ``d > 0`` raises
    the LP bound by ``d`` per unit; it may only move as far as the remaining
    gap allows.  The mirror image holds at the upper bound.
    """
    cutoff = best - 1 + 1e-6 if integral_obj else best - EPS_GAP * max(1.0, abs(best))
    gap = cutoff - bound
    if gap < 0:
        return lo, hi
    d = state.reduced_costs()[int_idx]
    x = state.x[int_idx]
    nb = np.ones(state.N, dtype=bool)
    nb[state.basis] = False
    nb = nb[int_idx]
    at_lo = nb & (np.abs(x - lo[int_idx]) <= EPS_INT) & (d > 1e-9)
    at_hi = nb & (np.abs(x - hi[int_idx]) <= EPS_INT) & (d < -1e-9)
    if not (at_lo.any() or at_hi.any()):
        return lo, hi
    lo, hi = lo.copy(), hi.copy()
    j = int_idx[at_lo]
    hi[j] = np.minimum(hi[j], lo[j] + np.floor(gap / d[at_lo] + 1e-9))
    j = int_idx[at_hi]
    lo[j] = np.maximum(lo[j], hi[j] - np.floor(gap / -d[at_hi] + 1e-9))
    return lo, hi


# ---------------------------------------------------------------------------
# connectivity separation

class Cut(NamedTuple):
    """Node set ``S`` (not containing the depot) with ``x(delta(S)) < target``."""

    nodes: frozenset
    edges: tuple
    sink: int
    value: float
    target: float


def max_flow(n_nodes: int, arcs: Sequence[tuple], source: int, sink: int):
    """Edmonds-Karp on a directed graph given as ``(tail, head, capacity)`` triples.

    Returns ``(value, source_side)`` where ``source_side`` is the set of nodes
    reachable from ``source`` in the final residual graph.
    """
    cap: Dict[int, Dict[int, float]] = {}
    for t, h, c in arcs:
        cap.setdefault(t, {}).setdefault(h, 0.0)
        cap.setdefault(h, {}).setdefault(t, 0.0)
        cap[t][h] += c
    flow = 0.0
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v, r in sorted(cap.get(u, {}).items()):
                if r > 1e-12 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return flow, frozenset(parent)
        path = []
        v = sink
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(cap[u][v] for u, v in path)
        for u, v in path:
            cap[u][v] -= push
            cap[v][u] += push
        flow += push


def separate_connectivity(
    inst: Instance,
    x: Sequence[float],
    targets: Optional[Mapping[int, float]] = None,
    eps: float = EPS_CUT,
) -> List[Cut]:
    """Violated connectivity cuts ``x(delta(S)) >= target_k`` for ``k`` in ``S``.

    ``x`` holds one value per edge.  By default every required non-depot node
    has target 2.  For each target node a minimum cut separating it from the
    depot is computed by max-flow on the support graph (each edge usable in
    both directions with capacity ``x_e``).
    """
    if targets is None:
        targets = {k: 2.0 for k in inst.stsp_required - {DEPOT}}
    arcs = []
    for e, edge in enumerate(inst.edges):
        if x[e] > 1e-12:
            arcs.append((edge.u, edge.v, float(x[e])))
            arcs.append((edge.v, edge.u, float(x[e])))
    found: Dict[frozenset, Cut] = {}
    for k in sorted(targets):
        target = targets[k]
        if target <= eps:
            continue
        value, source_side = max_flow(inst.node_count, arcs, DEPOT, k)
        if value < target - eps:
            S = frozenset(i for i in inst.nodes if i not in source_side)
            if S in found:
                continue
            edges = tuple(e for e, ed in enumerate(inst.edges) if (ed.u in S) != (ed.v in S))
            found[S] = Cut(S, edges, k, float(sum(x[e] for e in edges)), target)
    return list(found.values())
