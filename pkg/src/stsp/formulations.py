"""MILP formulations of the Steiner TSP.

Every builder takes an :class:`~stsp.instance.Instance` and returns a
:class:`~stsp.milp.MilpModel` whose variable names follow a fixed scheme:

``x_u_v``      number of traversals of edge {u, v} (u < v)
``z_i``        half the degree of node i
``xt_i_j``     arc i -> j is used
``g_i_j``      single-commodity flow on arc i -> j
``f_i_j_k``    commodity k uses arc i -> j
``r_i_j_k``    arc i -> j is the k-th arc of the walk

:func:`extract_edge_uses` maps any integral solution back to edge counts.
"""
from __future__ import annotations

import math
import re
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .bnb import SeparationCallback, separate_connectivity
from .instance import DEPOT, Instance, RankVector, arc_expand, compute_ranks
from .milp import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, EPS_INT, Constraint, MilpModel

CLASSICAL_CUT = "CLASSICAL_CUT"
SCF = "SCF"
SCF_STRONG = "SCF_STRONG"
MCF = "MCF"
TS1 = "TS1"
TS2 = "TS2"
TS = "TS"
TAGS = (CLASSICAL_CUT, SCF, SCF_STRONG, MCF, TS1, TS2)


class Formulation(NamedTuple):
    model: MilpModel
    sep: Optional[SeparationCallback]


def edge_name(inst: Instance, e: int) -> str:
    u, v = inst.edges[e].key
    return f"x_{u}_{v}"


def _arc_names(inst: Instance, prefix: str, suffix: str = "") -> List[str]:
    arcs = arc_expand(inst)
    return [f"{prefix}_{i}_{j}{suffix}" for i, j in arcs.arcs]


def _add_arc_vars(model: MilpModel, inst: Instance, prefix: str, suffix: str = "",
                  kind: str = BINARY, upper: float = 1.0, cost: bool = False) -> List[int]:
    arcs = arc_expand(inst)
    idx = []
    for a, name in enumerate(_arc_names(inst, prefix, suffix)):
        obj = arcs.cost[a] if cost else 0.0
        idx.append(model.add_variable(name, 0.0, upper, kind, obj))
    return idx


# ---------------------------------------------------------------------------
# classical formulation with connectivity cuts

def build_classical(inst: Instance) -> Formulation:
    """Edge-count model with parity via ``x(delta(i)) = 2 z_i`` and lazy connectivity."""
    model = MilpModel(name="classical")
    xs = [model.add_variable(edge_name(inst, e), 0, 2, INTEGER, ed.cost)
          for e, ed in enumerate(inst.edges)]
    required = inst.stsp_required
    degenerate = len(required) == 1
    zs = {}
    for i in inst.nodes:
        lower = 1 if i in required and not degenerate else 0
        zs[i] = model.add_variable(f"z_{i}", lower, len(inst.neighbors(i)), INTEGER)
    for i in inst.nodes:
        row = [(xs[e], 1.0) for _, e in inst.neighbors(i)]
        row.append((zs[i], -2.0))
        model.add_constraint(row, EQ, 0, f"par_{i}")
    model.finalize()

    def sep(x: np.ndarray) -> List[Constraint]:
        xe = x[: inst.edge_count]
        cuts = []
        for cut in separate_connectivity(inst, xe):
            row = tuple((xs[e], 1.0) for e in cut.edges)
            cuts.append(Constraint("", row, GE, 2.0))
        if not cuts and _integral(xe):
            cuts.extend(_stray_component_cuts(inst, xe, xs))
        return cuts

    return Formulation(model, sep)


def _integral(v: np.ndarray) -> bool:
    return bool(np.all(np.abs(v - np.round(v)) <= EPS_INT))


def _stray_component_cuts(inst: Instance, xe: np.ndarray, xs: Sequence[int]) -> List[Constraint]:
    """Cuts ``x(delta(S)) >= x_f`` for used components ``S`` that miss the depot.

    Required nodes are already tied to the depot by the ordinary cuts; this
    only removes closed walks over optional nodes, which can survive when
    edges cost nothing.
    """
    comp = _support_components(inst, xe)
    cuts = []
    for root, members in sorted(comp.items()):
        if DEPOT in members:
            continue
        inner = [e for e, ed in enumerate(inst.edges)
                 if ed.u in members and ed.v in members and xe[e] > 0.5]
        if not inner:
            continue
        f = inner[0]
        row = [(xs[e], 1.0) for e, ed in enumerate(inst.edges) if (ed.u in members) != (ed.v in members)]
        row.append((xs[f], -1.0))
        cuts.append(Constraint("", tuple(row), GE, 0.0))
    return cuts


def _support_components(inst: Instance, xe: Sequence[float]) -> Dict[int, set]:
    parent = {i: i for i in inst.nodes}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for e, ed in enumerate(inst.edges):
        if xe[e] > 0.5:
            parent[find(ed.u)] = find(ed.v)
    comps: Dict[int, set] = {}
    for i in inst.nodes:
        comps.setdefault(find(i), set()).add(i)
    return comps


# ---------------------------------------------------------------------------
# flow formulations

def _arc_degree_rows(model: MilpModel, inst: Instance, xt: Sequence[int]) -> None:
    """Out-degree at least one at required nodes and in/out balance everywhere."""
    arcs = arc_expand(inst)
    required = inst.stsp_required
    if len(required) > 1:
        for i in sorted(required):
            model.add_constraint([(xt[a], 1.0) for a in arcs.out_arcs[i]], GE, 1, f"out_{i}")
    for i in inst.nodes:
        row = [(xt[a], 1.0) for a in arcs.out_arcs[i]] + [(xt[a], -1.0) for a in arcs.in_arcs[i]]
        model.add_constraint(row, EQ, 0, f"bal_{i}")


def _scf(inst: Instance, ranks: Optional[RankVector], name: str) -> MilpModel:
    arcs = arc_expand(inst)
    required = inst.stsp_required
    n_r = len(required)
    model = MilpModel(name=name)
    xt = _add_arc_vars(model, inst, "xt", cost=True)
    g = _add_arc_vars(model, inst, "g", kind=CONTINUOUS, upper=math.inf)
    _arc_degree_rows(model, inst, xt)
    for i in inst.nodes:
        if i == DEPOT:
            continue
        row = [(g[a], 1.0) for a in arcs.in_arcs[i]] + [(g[a], -1.0) for a in arcs.out_arcs[i]]
        model.add_constraint(row, EQ, 1 if i in required else 0, f"gfl_{i}")
    for a, (i, j) in enumerate(arcs.arcs):
        cap = n_r - 1 if ranks is None else max(0, n_r - ranks[i] - 1)
        model.add_constraint([(g[a], 1.0), (xt[a], -float(cap))], LE, 0, f"gub_{i}_{j}")
    return model.finalize()


def build_scf(inst: Instance) -> MilpModel:
    """Single-commodity flow model: the depot ships one unit to each required node."""
    return _scf(inst, None, "scf")


def build_scf_strong(inst: Instance, ranks: Optional[RankVector] = None) -> MilpModel:
    """SCF with arc capacities ``n_R - r_i - 1`` on arcs leaving node ``i``."""
    if ranks is None:
        ranks = compute_ranks(inst)
    return _scf(inst, ranks, "scf_strong")


def build_mcf(inst: Instance) -> MilpModel:
    """Multi-commodity flow model with one binary commodity per required node."""
    arcs = arc_expand(inst)
    required = inst.stsp_required
    targets = sorted(required - {DEPOT})
    model = MilpModel(name="mcf")
    xt = _add_arc_vars(model, inst, "xt", cost=True)
    f = {k: _add_arc_vars(model, inst, "f", f"_{k}") for k in targets}
    _arc_degree_rows(model, inst, xt)
    for k in targets:
        fk = f[k]
        for i in inst.nodes:
            row = [(fk[a], 1.0) for a in arcs.in_arcs[i]] + [(fk[a], -1.0) for a in arcs.out_arcs[i]]
            rhs = 1 if i == k else (-1 if i == DEPOT else 0)
            model.add_constraint(row, EQ, rhs, f"ffl_{i}_{k}")
        for a, (i, j) in enumerate(arcs.arcs):
            model.add_constraint([(xt[a], 1.0), (fk[a], -1.0)], GE, 0, f"fub_{i}_{j}_{k}")
    return model.finalize()


# ---------------------------------------------------------------------------
# time-staged formulation

def ts1_stages(inst: Instance) -> int:
    return 2 * inst.edge_count


def ts2_stages(inst: Instance) -> int:
    return 2 * (inst.node_count - 1)


def build_ts(inst: Instance, stages: int) -> MilpModel:
    """Time-staged model: ``r_i_j_k`` says arc i -> j is the k-th arc walked.

    The walk starts at the depot in stage 1 and leaves every non-depot node
    in the stage after it arrives there.  At the depot the walk may instead
    stop, so walks shorter than ``stages`` arcs are allowed; it can only
    leave the depot in stage k+1 if it arrived there in stage k.
    """
    if stages < 2:
        raise ValueError(f"need at least 2 stages, got {stages}")
    arcs = arc_expand(inst)
    required = inst.stsp_required
    degenerate = len(required) == 1
    model = MilpModel(name=f"ts{stages}")
    r = {}
    for k in range(1, stages + 1):
        for a, (i, j) in enumerate(arcs.arcs):
            upper = 0.0 if (k == 1 and i != DEPOT) else 1.0
            r[a, k] = model.add_variable(f"r_{i}_{j}_{k}", 0, upper, BINARY, arcs.cost[a])
    ks = range(1, stages + 1)
    model.add_constraint([(r[a, 1], 1.0) for a in arcs.out_arcs[DEPOT]],
                         LE if degenerate else EQ, 1, "start")
    row = [(r[a, k], 1.0) for k in ks for a in arcs.out_arcs[DEPOT]]
    row += [(r[a, k], -1.0) for k in ks for a in arcs.in_arcs[DEPOT]]
    model.add_constraint(row, EQ, 0, "dep_bal")
    if not degenerate:
        for i in sorted(required):
            model.add_constraint([(r[a, k], 1.0) for k in ks for a in arcs.out_arcs[i]], GE, 1, f"visit_{i}")
    for i in inst.nodes:
        for k in range(1, stages):
            row = [(r[a, k], 1.0) for a in arcs.in_arcs[i]] + [(r[a, k + 1], -1.0) for a in arcs.out_arcs[i]]
            model.add_constraint(row, GE if i == DEPOT else EQ, 0, f"cont_{i}_{k}")
    return model.finalize()


# ---------------------------------------------------------------------------

def build(inst: Instance, tag: str, stages: Optional[int] = None) -> Formulation:
    """Build the formulation named by ``tag``; ``stages`` overrides TS1/TS2."""
    tag = tag.upper()
    if tag == CLASSICAL_CUT:
        return build_classical(inst)
    if tag == SCF:
        return Formulation(build_scf(inst), None)
    if tag == SCF_STRONG:
        return Formulation(build_scf_strong(inst), None)
    if tag == MCF:
        return Formulation(build_mcf(inst), None)
    if tag in (TS1, TS2, TS):
        if stages is None:
            if tag == TS:
                raise ValueError("tag TS needs an explicit stage count")
            stages = ts1_stages(inst) if tag == TS1 else ts2_stages(inst)
        return Formulation(build_ts(inst, stages), None)
    raise ValueError(f"unknown formulation tag {tag!r}")


_ARC_VAR = re.compile(r"^(xt|r)_(\d+)_(\d+)(?:_\d+)?$")
_EDGE_VAR = re.compile(r"^x_(\d+)_(\d+)$")


def extract_edge_uses(inst: Instance, tag: str, values: Mapping[str, float]) -> List[int]:
    """Edge traversal counts of an integral solution given as ``{name: value}``.

    Classical models read ``x_u_v`` directly; arc-based models add up the
    ``xt`` or ``r`` variables of both directions.
    """
    x = [0] * inst.edge_count
    pattern = _EDGE_VAR if tag.upper() == CLASSICAL_CUT else _ARC_VAR
    for name, value in values.items():
        m = pattern.match(name)
        if not m:
            continue
        if abs(value - round(value)) > EPS_INT:
            raise ValueError(f"variable {name} is not integral: {value}")
        u, v = int(m.group(m.lastindex - 1)), int(m.group(m.lastindex))
        x[inst.edge_id(u, v)] += int(round(value))
    return x
