"""Formulations of three Steiner TSP variants.

* SOP (orienteering): collect prizes ``p_i`` at visited customers, route cost
  at most the budget ``U``.
* SCPTP (capacitated profitable tour): revenue minus route cost, the
  demands of served customers at most the capacity ``Q``.
* STSPTW (time windows): serve every customer inside its window and be back
  at the depot by the horizon ``T``; the walk is indexed by how many
  customers have been served so far.

Customers are the required nodes other than the depot.  In the SOP and
SCPTP models the empty walk is feasible, so the depot only has to be left
when some customer is served.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .bnb import separate_connectivity
from .formulations import (Formulation, _integral, _stray_component_cuts, edge_name, extract_edge_uses,
                           ts1_stages)
from .instance import DEPOT, Instance, InstanceError, arc_expand, shortest_paths
from .milp import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MAX, MIN, Constraint, MilpModel

log = logging.getLogger(__name__)

SOP_TAGS = ("SOP_CUT", "SOP_TS", "SOP_MCF", "SOP_SCF", "SOP_SCF_STRONG")
SCPTP_TAGS = ("SCPTP_CUT", "SCPTP_TS", "SCPTP_SCF", "SCPTP_MCF")
STSPTW_TAG = "STSPTW"
VARIANT_TAGS = SOP_TAGS + SCPTP_TAGS + (STSPTW_TAG,)


def _check_payload(inst: Instance, problem: str) -> None:
    customers = inst.customers
    missing = []
    if problem in ("SOP", "SCPTP") and any(i not in inst.revenue for i in customers):
        missing.append("revenue")
    if problem == "SOP" and inst.budget is None:
        missing.append("budget U")
    if problem == "SCPTP":
        if any(i not in inst.demand for i in customers):
            missing.append("demand")
        if inst.capacity is None:
            missing.append("capacity Q")
    if problem == "STSPTW":
        if inst.horizon is None:
            missing.append("horizon T")
        if any(e.time is None for e in inst.edges):
            missing.append("traversal times")
    if missing:
        raise InstanceError(f"{problem} model needs {', '.join(missing)}")


def _add_y(model: MilpModel, inst: Instance) -> Dict[int, int]:
    return {i: model.add_variable(f"y_{i}", 0, 1, BINARY) for i in inst.customers}


def _objective(model: MilpModel, inst: Instance, problem: str, y: Mapping[int, int],
               cost_terms: List[Tuple[int, float]]) -> None:
    row = [(y[i], float(inst.revenue[i])) for i in inst.customers]
    if problem == "SCPTP":
        row += [(j, -float(c)) for j, c in cost_terms]
    model.set_objective(row, MAX)


def _side_rows(model: MilpModel, inst: Instance, problem: str, y: Mapping[int, int],
               cost_terms: List[Tuple[int, float]]) -> None:
    """Budget row for SOP, capacity row for SCPTP."""
    if problem == "SOP":
        model.add_constraint(cost_terms, LE, inst.budget, "budget")
    else:
        model.add_constraint([(y[i], float(inst.demand[i])) for i in inst.customers], LE, inst.capacity, "capacity")


# ---------------------------------------------------------------------------
# shared model parts

def _cut_model(inst: Instance, problem: str) -> Formulation:
    model = MilpModel(name=f"{problem.lower()}_cut")
    xs = [model.add_variable(edge_name(inst, e), 0, 2, INTEGER) for e in range(inst.edge_count)]
    zs = {i: model.add_variable(f"z_{i}", 0, len(inst.neighbors(i)), INTEGER) for i in inst.nodes}
    y = _add_y(model, inst)
    for i in inst.nodes:
        row = [(xs[e], 1.0) for _, e in inst.neighbors(i)] + [(zs[i], -2.0)]
        model.add_constraint(row, EQ, 0, f"par_{i}")
    for i in inst.customers:
        model.add_constraint([(zs[i], 1.0), (y[i], -1.0)], GE, 0, f"deg_{i}")
    cost_terms = [(xs[e], float(ed.cost)) for e, ed in enumerate(inst.edges)]
    _objective(model, inst, problem, y, cost_terms)
    _side_rows(model, inst, problem, y, cost_terms)
    model.finalize()
    m = inst.edge_count

    def sep(x: np.ndarray) -> List[Constraint]:
        xe = x[:m]
        targets = {i: 2.0 * x[y[i]] for i in inst.customers}
        cuts = []
        for cut in separate_connectivity(inst, xe, targets):
            row = tuple((xs[e], 1.0) for e in cut.edges) + ((y[cut.sink], -2.0),)
            cuts.append(Constraint("", row, GE, 0.0))
        if not cuts and _integral(xe):
            cuts.extend(_stray_component_cuts(inst, xe, xs))
        return cuts

    return Formulation(model, sep)


def _ts_model(inst: Instance, problem: str, stages: int) -> MilpModel:
    if stages < 2:
        raise ValueError(f"need at least 2 stages, got {stages}")
    arcs = arc_expand(inst)
    model = MilpModel(name=f"{problem.lower()}_ts{stages}")
    r = {}
    for k in range(1, stages + 1):
        for a, (i, j) in enumerate(arcs.arcs):
            upper = 0.0 if (k == 1 and i != DEPOT) else 1.0
            r[a, k] = model.add_variable(f"r_{i}_{j}_{k}", 0, upper, BINARY)
    y = _add_y(model, inst)
    ks = range(1, stages + 1)
    model.add_constraint([(r[a, 1], 1.0) for a in arcs.out_arcs[DEPOT]], LE, 1, "start")
    row = [(r[a, k], 1.0) for k in ks for a in arcs.out_arcs[DEPOT]]
    row += [(r[a, k], -1.0) for k in ks for a in arcs.in_arcs[DEPOT]]
    model.add_constraint(row, EQ, 0, "dep_bal")
    for i in inst.customers:
        row = [(r[a, k], 1.0) for k in ks for a in arcs.out_arcs[i]] + [(y[i], -1.0)]
        model.add_constraint(row, GE, 0, f"visit_{i}")
    for i in inst.nodes:
        for k in range(1, stages):
            row = [(r[a, k], 1.0) for a in arcs.in_arcs[i]] + [(r[a, k + 1], -1.0) for a in arcs.out_arcs[i]]
            model.add_constraint(row, GE if i == DEPOT else EQ, 0, f"cont_{i}_{k}")
    cost_terms = [(r[a, k], float(arcs.cost[a])) for k in ks for a in range(len(arcs))]
    _objective(model, inst, problem, y, cost_terms)
    _side_rows(model, inst, problem, y, cost_terms)
    return model.finalize()


def _arc_rows(model: MilpModel, inst: Instance, xt: List[int], y: Mapping[int, int]) -> None:
    """Out-degree at least ``y_i`` at customers, in/out balance everywhere."""
    arcs = arc_expand(inst)
    for i in inst.customers:
        model.add_constraint([(xt[a], 1.0) for a in arcs.out_arcs[i]] + [(y[i], -1.0)], GE, 0, f"out_{i}")
    for i in inst.nodes:
        row = [(xt[a], 1.0) for a in arcs.out_arcs[i]] + [(xt[a], -1.0) for a in arcs.in_arcs[i]]
        model.add_constraint(row, EQ, 0, f"bal_{i}")


def _arc_vars(model: MilpModel, inst: Instance, prefix: str, suffix: str = "",
              kind: str = BINARY, upper: float = 1.0) -> List[int]:
    return [model.add_variable(f"{prefix}_{i}_{j}{suffix}", 0, upper, kind)
            for i, j in arc_expand(inst).arcs]


def _mcf_model(inst: Instance, problem: str) -> MilpModel:
    arcs = arc_expand(inst)
    customers = inst.customers
    model = MilpModel(name=f"{problem.lower()}_mcf")
    xt = _arc_vars(model, inst, "xt")
    f = {k: _arc_vars(model, inst, "f", f"_{k}") for k in customers}
    y = _add_y(model, inst)
    _arc_rows(model, inst, xt, y)
    for k in customers:
        fk = f[k]
        for i in inst.nodes:
            row = [(fk[a], 1.0) for a in arcs.in_arcs[i]] + [(fk[a], -1.0) for a in arcs.out_arcs[i]]
            if i == k:
                row.append((y[k], -1.0))
            elif i == DEPOT:
                row.append((y[k], 1.0))
            model.add_constraint(row, EQ, 0, f"ffl_{i}_{k}")
        if problem == "SOP":
            for a, (i, j) in enumerate(arcs.arcs):
                model.add_constraint([(xt[a], 1.0), (fk[a], -1.0)], GE, 0, f"fub_{i}_{j}_{k}")
    if problem == "SCPTP":
        for a, (i, j) in enumerate(arcs.arcs):
            row = [(f[k][a], float(inst.demand[k])) for k in customers] + [(xt[a], -float(inst.capacity))]
            model.add_constraint(row, LE, 0, f"load_{i}_{j}")
    cost_terms = [(xt[a], float(arcs.cost[a])) for a in range(len(arcs))]
    _objective(model, inst, problem, y, cost_terms)
    _side_rows(model, inst, problem, y, cost_terms)
    return model.finalize()


def _sop_scf_model(inst: Instance, strong: bool) -> MilpModel:
    """SCF for SOP: ``g_a`` is the route cost accumulated when arc ``a`` starts."""
    arcs = arc_expand(inst)
    U = float(inst.budget)
    model = MilpModel(name="sop_scf_strong" if strong else "sop_scf")
    xt = _arc_vars(model, inst, "xt")
    g = _arc_vars(model, inst, "g", kind=CONTINUOUS, upper=math.inf)
    y = _add_y(model, inst)
    _arc_rows(model, inst, xt, y)
    for i in inst.nodes:
        if i == DEPOT:
            continue
        row = [(g[a], 1.0) for a in arcs.out_arcs[i]] + [(g[a], -1.0) for a in arcs.in_arcs[i]]
        row += [(xt[a], -float(arcs.cost[a])) for a in arcs.in_arcs[i]]
        model.add_constraint(row, EQ, 0, f"gfl_{i}")
    spc = shortest_paths(inst, DEPOT, "cost") if strong else None
    for a, (i, j) in enumerate(arcs.arcs):
        c = float(arcs.cost[a])
        upper = U - c - (spc[j] if strong else 0.0)
        model.add_constraint([(g[a], 1.0), (xt[a], -upper)], LE, 0, f"gub_{i}_{j}")
        if strong and spc[i] > 0:
            model.add_constraint([(g[a], 1.0), (xt[a], -float(spc[i]))], GE, 0, f"glb_{i}_{j}")
    cost_terms = [(xt[a], float(arcs.cost[a])) for a in range(len(arcs))]
    _objective(model, inst, "SOP", y, cost_terms)
    _side_rows(model, inst, "SOP", y, cost_terms)
    return model.finalize()


def _scptp_scf_model(inst: Instance) -> MilpModel:
    """SCF for SCPTP: ``g_a`` is the load carried on arc ``a``; no explicit capacity row."""
    arcs = arc_expand(inst)
    Q = float(inst.capacity)
    customers = set(inst.customers)
    model = MilpModel(name="scptp_scf")
    xt = _arc_vars(model, inst, "xt")
    g = _arc_vars(model, inst, "g", kind=CONTINUOUS, upper=math.inf)
    y = _add_y(model, inst)
    _arc_rows(model, inst, xt, y)
    row = [(g[a], 1.0) for a in arcs.out_arcs[DEPOT]] + [(g[a], -1.0) for a in arcs.in_arcs[DEPOT]]
    model.add_constraint(row, LE, Q, "depot_load")
    for i in inst.nodes:
        if i == DEPOT:
            continue
        row = [(g[a], 1.0) for a in arcs.in_arcs[i]] + [(g[a], -1.0) for a in arcs.out_arcs[i]]
        if i in customers:
            row.append((y[i], -float(inst.demand[i])))
        model.add_constraint(row, EQ, 0, f"gfl_{i}")
    for a, (i, j) in enumerate(arcs.arcs):
        model.add_constraint([(g[a], 1.0), (xt[a], -Q)], LE, 0, f"gub_{i}_{j}")
    cost_terms = [(xt[a], float(arcs.cost[a])) for a in range(len(arcs))]
    _objective(model, inst, "SCPTP", y, cost_terms)
    return model.finalize()


def audit_scptp_capacity(model: MilpModel, inst: Instance, tol: float = 1e-9) -> bool:
    """Check that the load rows of an SCPTP_SCF model imply ``sum q_i y_i <= Q``.

    The depot row minus every node's flow equation cancels all ``g``
    coefficients and leaves exactly the capacity row.
    """
    combined: Dict[int, float] = {}
    rhs = 0.0
    for con in model.constraints:
        if con.name == "depot_load":
            weight = 1.0
        elif con.name.startswith("gfl_"):
            weight = -1.0
        else:
            continue
        for j, c in con.row:
            combined[j] = combined.get(j, 0.0) + weight * c
        rhs += weight * con.rhs
    expected = {model.var(f"y_{i}"): float(inst.demand[i]) for i in inst.customers}
    for j, c in combined.items():
        if abs(c - expected.get(j, 0.0)) > tol:
            return False
    return all(abs(combined.get(j, 0.0) - q) <= tol for j, q in expected.items()) and abs(rhs - inst.capacity) <= tol


# ---------------------------------------------------------------------------
# public builders

def build_sop(inst: Instance, tag: str, stages: Optional[int] = None) -> Formulation:
    """Steiner orienteering model for ``tag`` in SOP_CUT/TS/MCF/SCF/SCF_STRONG."""
    tag = tag.upper()
    _check_payload(inst, "SOP")
    if tag == "SOP_CUT":
        return _cut_model(inst, "SOP")
    if tag == "SOP_TS":
        return Formulation(_ts_model(inst, "SOP", stages or ts1_stages(inst)), None)
    if tag == "SOP_MCF":
        return Formulation(_mcf_model(inst, "SOP"), None)
    if tag == "SOP_SCF":
        return Formulation(_sop_scf_model(inst, strong=False), None)
    if tag == "SOP_SCF_STRONG":
        return Formulation(_sop_scf_model(inst, strong=True), None)
    raise ValueError(f"unknown SOP tag {tag!r}")


def build_scptp(inst: Instance, tag: str, stages: Optional[int] = None, strict: bool = True) -> Formulation:
    """Capacitated profitable tour model for ``tag`` in SCPTP_CUT/TS/SCF/MCF.

    A capacity above the total demand is an error unless ``strict`` is
    false, in which case it is only logged.
    """
    tag = tag.upper()
    _check_payload(inst, "SCPTP")
    total = sum(inst.demand[i] for i in inst.customers)
    if inst.capacity > total:
        msg = f"capacity {inst.capacity} exceeds total demand {total}"
        if strict:
            raise InstanceError(msg)
        log.warning(msg)
    if tag == "SCPTP_CUT":
        return _cut_model(inst, "SCPTP")
    if tag == "SCPTP_TS":
        return Formulation(_ts_model(inst, "SCPTP", stages or ts1_stages(inst)), None)
    if tag == "SCPTP_MCF":
        return Formulation(_mcf_model(inst, "SCPTP"), None)
    if tag == "SCPTP_SCF":
        model = _scptp_scf_model(inst)
        if not audit_scptp_capacity(model, inst):
            raise AssertionError("SCPTP_SCF load rows do not imply the capacity constraint")
        return Formulation(model, None)
    raise ValueError(f"unknown SCPTP tag {tag!r}")


def build_stsptw(inst: Instance) -> MilpModel:
    """Service-indexed model: ``xt_i_j_k`` is arc i -> j walked after ``k`` services.

    ``g_i_j_k`` is the clock when that traversal starts and ``y_i_k`` says
    customer ``i`` is served ``k``-th.  Clocks only have lower bounds, so
    waiting is allowed.  Besides the service-to-service clock rows the
    model keeps the clock running when the walk passes through a customer
    or the depot within one level, and requires the final arrival at the
    depot by ``T``.
    """
    _check_payload(inst, "STSPTW")
    T = float(inst.horizon)
    customers = list(inst.customers)
    n_r = len(customers)
    cust = set(customers)
    for i in customers:
        a, b = inst.window(i)
        if a + inst.service.get(i, 0) > T:
            raise InstanceError(f"window of node {i} cannot be met: a + s > T")
    arcs = arc_expand(inst)
    t = [float(inst.edge_time(arcs.arc_edge[a])) for a in range(len(arcs))]
    levels = range(n_r + 1)
    model = MilpModel(name="stsptw")
    x = {k: _arc_vars(model, inst, "xt", f"_{k}") for k in levels}
    g = {k: _arc_vars(model, inst, "g", f"_{k}", kind=CONTINUOUS, upper=math.inf) for k in levels}
    y = {(i, k): model.add_variable(f"y_{i}_{k}", 0, 1, BINARY) for i in customers for k in range(1, n_r + 1)}
    model.set_objective([(x[k][a], float(arcs.cost[a])) for k in levels for a in range(len(arcs))], MIN)

    def out_(i, k, var):
        return [(var[k][a], 1.0) for a in arcs.out_arcs[i]]

    def in_(i, k, var, coef=1.0):
        return [(var[k][a], coef) for a in arcs.in_arcs[i]]

    def neg(row):
        return [(j, -c) for j, c in row]

    def arrival(i, k):
        # clock at the end of every level-k traversal into i
        return in_(i, k, g) + [(x[k][a], t[a]) for a in arcs.in_arcs[i]]

    # each customer served once, one customer per position
    for i in customers:
        model.add_constraint([(y[i, k], 1.0) for k in range(1, n_r + 1)], EQ, 1, f"once_{i}")
    for k in range(1, n_r + 1):
        model.add_constraint([(y[i, k], 1.0) for i in customers], EQ, 1, f"pos_{k}")

    # departures from and returns to the depot
    if n_r:
        model.add_constraint(out_(DEPOT, 0, x), EQ, 1, "dep_out")
        for k in range(1, n_r):
            model.add_constraint(in_(DEPOT, k, x) + neg(out_(DEPOT, k, x)), EQ, 0, f"dep_bal_{k}")
        model.add_constraint(in_(DEPOT, n_r, x), EQ, 1, "dep_in")
    else:
        for k in levels:
            model.add_constraint(out_(DEPOT, k, x), EQ, 0, f"dep_out_{k}")

    # flow conservation per level; a service moves the walk one level up
    for i in inst.nodes:
        if i == DEPOT:
            continue
        if i in cust:
            for k in levels:
                row = in_(i, k, x) + neg(out_(i, k, x))
                if k >= 1:
                    row.append((y[i, k], 1.0))
                if k < n_r:
                    row.append((y[i, k + 1], -1.0))
                model.add_constraint(row, EQ, 0, f"lvl_{i}_{k}")
        else:
            for k in levels:
                model.add_constraint(in_(i, k, x) + neg(out_(i, k, x)), EQ, 0, f"lvl_{i}_{k}")

    # clock propagation
    for i in customers:
        for k in range(n_r):
            # level-k departures cover the pass-throughs, the level-(k+1) one the service
            row = out_(i, k, g) + out_(i, k + 1, g) + neg(arrival(i, k))
            row.append((y[i, k + 1], -float(inst.service.get(i, 0))))
            model.add_constraint(row, GE, 0, f"clk_{i}_{k}")
        # passing through a customer without serving it keeps the clock
        for k in levels:
            row = out_(i, k, g) + neg(arrival(i, k))
            if k < n_r:
                row.append((y[i, k + 1], T))
            model.add_constraint(row, GE, 0, f"pass_{i}_{k}")
    for i in inst.nodes:
        if i in cust:
            continue
        ks = range(1, n_r) if i == DEPOT else levels
        for k in ks:
            model.add_constraint(out_(i, k, g) + neg(arrival(i, k)), GE, 0, f"clk_{i}_{k}")

    # time windows and the horizon
    for i in customers:
        a_i, b_i = inst.window(i)
        s_i = float(inst.service.get(i, 0))
        for k in range(1, n_r + 1):
            model.add_constraint(out_(i, k, g) + [(y[i, k], -(a_i + s_i))], GE, 0, f"win_{i}_{k}")
            model.add_constraint(arrival(i, k - 1) + [(y[i, k], T - b_i)], LE, T, f"due_{i}_{k}")
    if n_r:
        model.add_constraint(arrival(DEPOT, n_r), LE, T, "return")
    for k in levels:
        for a, (i, j) in enumerate(arcs.arcs):
            model.add_constraint([(g[k][a], 1.0), (x[k][a], -T)], LE, 0, f"gub_{i}_{j}_{k}")
    return model.finalize()


def _levels_of(x, arcs, xt, ys, n_r):
    order = [None] * (n_r + 1)
    for (i, k), j in ys.items():
        if x[j] > 0.5:
            order[k] = i
    stops = [DEPOT] + order[1:] + [DEPOT]
    level_arcs = [[arcs.arcs[a] for a in range(len(arcs)) if x[xt[k][a]] > 0.5] for k in range(n_r + 1)]
    return stops, level_arcs


def _trail(arc_list, start, end):
    """Directed trail from ``start`` to ``end`` using every arc once, or ``None``."""
    out: Dict[int, List[int]] = {}
    for i, j in sorted(arc_list, reverse=True):
        out.setdefault(i, []).append(j)
    stack, path = [start], []
    while stack:
        u = stack[-1]
        if out.get(u):
            stack.append(out[u].pop())
        else:
            path.append(stack.pop())
    path.reverse()
    if len(path) != len(arc_list) + 1 or path[-1] != end:
        return None
    return list(zip(path, path[1:]))


def _replay_levels(inst: Instance, level_arcs, stops):
    """Walk the levels in order with earliest service starts.

    Returns ``(walk, schedule, on_time)`` or ``None`` when some level's arcs
    do not form one trail between consecutive stops.
    """
    from .oracle import Service

    walk, schedule = [], []
    clock, on_time = 0.0, True
    n_r = len(stops) - 2
    for k, used in enumerate(level_arcs):
        if not used:
            if n_r == 0 and k == 0:
                continue
            return None
        trail = _trail(used, stops[k], stops[k + 1])
        if trail is None:
            return None
        walk.extend(trail)
        clock += sum(float(inst.edge_time(inst.edge_id(i, j))) for i, j in trail)
        if k < n_r:
            node = stops[k + 1]
            a_i, b_i = inst.window(node)
            clock = max(clock, float(a_i))
            on_time = on_time and clock <= b_i + 1e-9
            schedule.append(Service(len(walk) - 1, node, clock))
            clock += float(inst.service.get(node, 0))
    on_time = on_time and clock <= float(inst.horizon) + 1e-9
    return walk, schedule, on_time


def stsptw_walk(inst: Instance, values: Mapping[str, float]):
    """Timed walk of an integral STSPTW solution, given by variable name."""
    from .oracle import WalkSolution

    arcs = arc_expand(inst)
    n_r = len(inst.customers)
    order = service_order(values)
    stops = [DEPOT] + list(order) + [DEPOT]
    level_arcs = [[(i, j) for i, j in arcs.arcs if values.get(f"xt_{i}_{j}_{k}", 0.0) > 0.5]
                  for k in range(n_r + 1)]
    replay = _replay_levels(inst, level_arcs, stops)
    if replay is None:
        raise ValueError("solution arcs do not form a walk through the service order")
    walk, schedule, _ = replay
    uses = [0] * inst.edge_count
    for i, j in walk:
        uses[inst.edge_id(i, j)] += 1
    cost = inst.cost_of(uses)
    return WalkSolution(tuple(uses), walk, cost, frozenset(order), cost, schedule)


def stsptw_schedule_sep(inst: Instance, model: MilpModel):
    """Lazy check that an integral STSPTW point is a real timed walk.

    The clock rows of the model add up departure times per node and level,
    so a loop walked inside one level can make the sums work out while no
    single clock does.  At integral points this callback rebuilds the walk
    level by level, runs the clock (waiting allowed, service only at the
    level boundaries) and, if the walk is disconnected or late, returns the
    no-good row that removes that exact ``(xt, y)`` pattern.
    """
    arcs = arc_expand(inst)
    index = {name: j for j, name in enumerate(model.var_names)}
    customers = list(inst.customers)
    n_r = len(customers)
    levels = range(n_r + 1)
    xt = {k: [index[f"xt_{i}_{j}_{k}"] for i, j in arcs.arcs] for k in levels}
    ys = {(i, k): index[f"y_{i}_{k}"] for i in customers for k in range(1, n_r + 1)}
    binaries = [j for k in levels for j in xt[k]] + list(ys.values())

    def feasible(x: np.ndarray) -> bool:
        stops, level_arcs = _levels_of(x, arcs, xt, ys, n_r)
        replay = _replay_levels(inst, level_arcs, stops)
        return replay is not None and replay[2]

    def sep(x: np.ndarray) -> List[Constraint]:
        if not _integral(x[binaries]) or feasible(x):
            return []
        ones = [j for j in binaries if x[j] > 0.5]
        row = tuple((j, -1.0 if x[j] > 0.5 else 1.0) for j in binaries)
        return [Constraint("", row, GE, 1.0 - len(ones))]

    return sep


def build_variant(inst: Instance, tag: str, stages: Optional[int] = None) -> Formulation:
    tag = tag.upper()
    if tag in SOP_TAGS:
        return build_sop(inst, tag, stages)
    if tag in SCPTP_TAGS:
        return build_scptp(inst, tag, stages)
    if tag == STSPTW_TAG:
        model = build_stsptw(inst)
        return Formulation(model, stsptw_schedule_sep(inst, model))
    raise ValueError(f"unknown variant tag {tag!r}")


# ---------------------------------------------------------------------------
# solution mapping

def selected_customers(values: Mapping[str, float]) -> frozenset:
    """Customers ``i`` with ``y_i`` (or any ``y_i_k``) at one."""
    chosen = set()
    for name, v in values.items():
        if name.startswith("y_") and v > 0.5:
            chosen.add(int(name.split("_")[1]))
    return frozenset(chosen)


def service_order(values: Mapping[str, float]) -> Tuple[int, ...]:
    """Customers of an STSPTW solution in order of service."""
    pos = {}
    for name, v in values.items():
        parts = name.split("_")
        if parts[0] == "y" and len(parts) == 3 and v > 0.5:
            pos[int(parts[2])] = int(parts[1])
    return tuple(pos[k] for k in sorted(pos))


def variant_edge_uses(inst: Instance, tag: str, values: Mapping[str, float]) -> List[int]:
    """Edge traversal counts of an integral variant solution."""
    tag = tag.upper()
    return extract_edge_uses(inst, "CLASSICAL_CUT" if tag.endswith("_CUT") else tag, values)
