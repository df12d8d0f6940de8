"""Empirical checks of the projection results and bound comparisons.

The projection checks take an LP-feasible point of a flow model, map it to
edge space (``x_e`` is the sum of the two arc values) and test the implied
cut inequalities on every node set ``S`` that avoids the depot and contains
a required node.  Enumeration is exhaustive, so these are for small graphs.

:func:`compare_bounds` solves the LP relaxation (and optionally the MILP)
of each formulation, checks the provable ordering of the LP bounds and
records the open conjectures as findings without asserting them.
"""
from __future__ import annotations

import json
import logging
import math
import re
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .bnb import BUDGET_EXHAUSTED, solve_milp
from .formulations import (CLASSICAL_CUT, MCF, SCF, SCF_STRONG, TAGS, TS1, TS2, build, build_classical,
                           build_mcf, build_scf, build_scf_strong)
from .instance import DEPOT, Instance, RankVector, compute_ranks
from .lp import OPTIMAL, reoptimize_with_rows, solve_lp
from .milp import MilpModel, model_stats

log = logging.getLogger(__name__)

MAX_ENUM_NODES = 10
EPS_PROJ = 1e-8
EPS_FEAS = 1e-6
EPS_OPT = 1e-6

HOLDS = "holds"
VIOLATED = "violated"
REJECTED = "rejected"
UNTESTED = "untested"

Point = Union[np.ndarray, Sequence[float], Mapping[str, float]]


class AnalysisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# projection to edge space

_ARC = re.compile(r"^(?:xt|r)_(\d+)_(\d+)(?:_\d+)?$")
_EDGE = re.compile(r"^x_(\d+)_(\d+)$")


def project_edges(inst: Instance, model: MilpModel, x: Sequence[float]) -> np.ndarray:
    """Edge values of a (possibly fractional) point of any STSP model.

    Arc variables ``xt_i_j`` and staged arcs ``r_i_j_k`` add to edge {i, j};
    edge variables ``x_u_v`` are copied.
    """
    out = np.zeros(inst.edge_count)
    for j, name in enumerate(model.var_names):
        m = _ARC.match(name) or _EDGE.match(name)
        if m is None:
            continue
        u, v = int(m.group(1)), int(m.group(2))
        out[inst.edge_id(u, v)] += x[j]
    return out


def _as_vector(model: MilpModel, point: Point) -> np.ndarray:
    if isinstance(point, Mapping):
        x = np.zeros(model.n_vars)
        for name, v in point.items():
            x[model.var(name)] = v
        return x
    x = np.asarray(point, dtype=float)
    if x.shape != (model.n_vars,):
        raise AnalysisError(f"point has {x.size} entries, model has {model.n_vars} variables")
    return x


# ---------------------------------------------------------------------------
# subset enumeration

@dataclass(frozen=True)
class SubsetTable:
    """All ``S`` within ``V \\ {1}`` meeting the required set, with their cut edges."""

    sets: Tuple[frozenset, ...]
    cut: np.ndarray            # (n_sets, |E|) 0/1, edge in delta(S)
    entering: np.ndarray       # (n_sets, |E|) outside endpoint of each cut edge, 0 if not cut
    n_required: np.ndarray     # |S cap V_R|

    def __len__(self) -> int:
        return len(self.sets)


def subset_table(inst: Instance, max_nodes: int = MAX_ENUM_NODES) -> SubsetTable:
    if inst.node_count > max_nodes:
        raise AnalysisError(f"subset enumeration limited to {max_nodes} nodes, got {inst.node_count}")
    others = [i for i in inst.nodes if i != DEPOT]
    req = inst.stsp_required
    sets, cut, entering, nreq = [], [], [], []
    for mask in range(1, 1 << len(others)):
        S = frozenset(others[b] for b in range(len(others)) if mask >> b & 1)
        k = len(S & req)
        if not k:
            continue
        row = np.zeros(inst.edge_count)
        outer = np.zeros(inst.edge_count, dtype=int)
        for e, ed in enumerate(inst.edges):
            if (ed.u in S) != (ed.v in S):
                row[e] = 1.0
                outer[e] = ed.v if ed.u in S else ed.u
        sets.append(S)
        cut.append(row)
        entering.append(outer)
        nreq.append(k)
    return SubsetTable(tuple(sets), np.array(cut).reshape(len(sets), inst.edge_count),
                       np.array(entering, dtype=int).reshape(len(sets), inst.edge_count), np.array(nreq))


# ---------------------------------------------------------------------------
# reports

@dataclass
class ProjectionReport:
    check: str
    status: str
    n_inequalities: int = 0
    worst_slack: float = math.inf
    worst_set: Optional[Tuple[int, ...]] = None
    worst_k: Optional[int] = None
    residual: float = 0.0
    edge_values: Optional[List[float]] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == HOLDS


def _reject(check: str, residual: float) -> ProjectionReport:
    return ProjectionReport(check, REJECTED, residual=float(residual))


def _feasible(model: MilpModel, x: np.ndarray, check: str, tol: float) -> Optional[ProjectionReport]:
    residual = model.max_violation(x)
    if residual > tol:
        log.info("%s: point rejected, max violation %.3g", check, residual)
        return _reject(check, residual)
    return None


def _finish(check: str, slacks: np.ndarray, table: SubsetTable, xe: np.ndarray, tol: float,
            ks: Optional[np.ndarray] = None) -> ProjectionReport:
    if slacks.size == 0:
        return ProjectionReport(check, HOLDS, 0, math.inf, None, None, 0.0, xe.tolist())
    w = int(np.argmin(slacks))
    rep = ProjectionReport(check, HOLDS if slacks[w] >= -tol else VIOLATED, int(slacks.size),
                           float(slacks[w]), None, None, 0.0, xe.tolist())
    if ks is None:
        rep.worst_set = tuple(sorted(table.sets[w]))
    else:
        s_idx, k = ks[w]
        rep.worst_set, rep.worst_k = tuple(sorted(table.sets[int(s_idx)])), int(k)
    return rep


def check_theorem1(inst: Instance, lp_point: Point, model: Optional[MilpModel] = None,
                   tol: float = EPS_PROJ, table: Optional[SubsetTable] = None) -> ProjectionReport:
    """Weak cuts ``x(delta(S)) >= 2 |S cap V_R| / (n_R - 1)`` at an SCF LP point."""
    model = model or build_scf(inst)
    x = _as_vector(model, lp_point)
    bad = _feasible(model, x, "theorem1", EPS_FEAS)
    if bad:
        return bad
    table = table or subset_table(inst)
    xe = project_edges(inst, model, x)
    n_r = len(inst.stsp_required)
    if n_r <= 1:
        return _finish("theorem1", np.zeros(0), table, xe, tol)
    slack = table.cut @ xe - 2.0 * table.n_required / (n_r - 1)
    return _finish("theorem1", slack, table, xe, tol)


def theorem2_slacks(inst: Instance, xe: np.ndarray, ranks: RankVector, table: SubsetTable):
    """Slacks of the rank-strengthened inequalities for every ``S`` and ``k`` in ``[L(S), U(S)]``.

    Returns ``(slacks, index)`` where ``index[t] = (set position, k)``, and
    the slacks of the ``k = L(S)`` corollary ``x(delta(S)) >= 2|S cap V_R| / (n_R - L(S) - 1)``
    (``nan`` when ``n_R - L(S) - 1 <= 0``).
    """
    n_r = len(inst.stsp_required)
    r = np.zeros(inst.node_count + 1)
    for i in inst.nodes:
        r[i] = ranks[i]
    slacks, index, corollary = [], [], []
    for s, S in enumerate(table.sets):
        cut_edges = np.flatnonzero(table.cut[s])
        outside = table.entering[s, cut_edges]
        border = sorted(set(outside.tolist()))
        lo = int(min(r[i] for i in border))
        hi = int(max(r[i] for i in border))
        x_cut = float(xe[cut_edges].sum())
        rhs = 2.0 * table.n_required[s]
        for k in range(lo, hi + 1):
            extra = 2.0 * float(np.sum(np.maximum(0.0, k - r[outside]) * xe[cut_edges]))
            slacks.append((n_r - k - 1) * x_cut + extra - rhs)
            index.append((s, k))
        denom = n_r - lo - 1
        corollary.append(x_cut - rhs / denom if denom > 0 else math.nan)
    return np.array(slacks), np.array(index, dtype=int).reshape(-1, 2), np.array(corollary)


def check_theorem2(inst: Instance, lp_point: Point, model: Optional[MilpModel] = None,
                   ranks: Optional[RankVector] = None, tol: float = EPS_PROJ,
                   table: Optional[SubsetTable] = None) -> ProjectionReport:
    """Rank-strengthened cut inequalities at an SCF_STRONG LP point.

    The corollary at ``k = L(S)`` is checked as well; it must agree with the
    main family (it is the same inequality rescaled), and a disagreement is
    reported as a violation.
    """
    ranks = ranks or compute_ranks(inst)
    model = model or build_scf_strong(inst, ranks)
    x = _as_vector(model, lp_point)
    bad = _feasible(model, x, "theorem2", EPS_FEAS)
    if bad:
        return bad
    table = table or subset_table(inst)
    xe = project_edges(inst, model, x)
    slacks, index, corollary = theorem2_slacks(inst, xe, ranks, table)
    rep = _finish("theorem2", slacks, table, xe, tol, index)
    cor = corollary[~np.isnan(corollary)]
    if cor.size and cor.min() < -tol:
        rep.status = VIOLATED
    return rep


def check_mcf_projection(inst: Instance, lp_point: Point, model: Optional[MilpModel] = None,
                         tol: float = EPS_PROJ, table: Optional[SubsetTable] = None) -> ProjectionReport:
    """Full connectivity cuts ``x(delta(S)) >= 2`` at an MCF LP point."""
    model = model or build_mcf(inst)
    x = _as_vector(model, lp_point)
    bad = _feasible(model, x, "mcf_projection", EPS_FEAS)
    if bad:
        return bad
    table = table or subset_table(inst)
    xe = project_edges(inst, model, x)
    return _finish("mcf_projection", table.cut @ xe - 2.0, table, xe, tol)


def check_sop_projection(inst: Instance, lp_point: Point, model: Optional[MilpModel] = None,
                         tol: float = EPS_PROJ, table: Optional[SubsetTable] = None) -> ProjectionReport:
    """Budget cuts ``U x(delta(S)) >= sum of c_e x_e over edges touching S`` at an SOP_SCF point."""
    from .variants import build_sop

    model = model or build_sop(inst, "SOP_SCF").model
    x = _as_vector(model, lp_point)
    bad = _feasible(model, x, "sop_projection", EPS_FEAS)
    if bad:
        return bad
    table = table or subset_table(inst)
    xe = project_edges(inst, model, x)
    cost = np.array([float(e.cost) for e in inst.edges])
    touch = np.array([[1.0 if (e.u in S or e.v in S) else 0.0 for e in inst.edges] for S in table.sets])
    touch = touch.reshape(len(table), inst.edge_count)
    slack = float(inst.budget) * (table.cut @ xe) - touch @ (cost * xe)
    return _finish("sop_projection", slack, table, xe, tol)


# ---------------------------------------------------------------------------
# LP points

def lp_optimum(model: MilpModel) -> np.ndarray:
    sol, _ = solve_lp(model)
    if sol.status != OPTIMAL:
        raise AnalysisError(f"LP relaxation of {model.name} is {sol.status}")
    return sol.x


def sample_lp_points(model: MilpModel, count: int = 10, seed: int = 0, vertices: int = 6) -> List[np.ndarray]:
    """Feasible points of the LP relaxation, as random convex combinations of vertices.

    Vertices come from random objectives over every variable, each solve
    warm-started from the previous basis.  Models with unbounded variables
    get those variables' objective coefficients made non-negative so that the
    LPs stay bounded.
    """
    rng = np.random.default_rng(seed)
    c0, _, _, _, col_lo, col_hi = model.dense()
    verts = [lp_optimum(model)]
    warm = None
    free_up = ~np.isfinite(col_hi)
    for _ in range(vertices):
        c = rng.normal(size=model.n_vars)
        c[free_up] = np.abs(c[free_up])
        trial = model.copy()
        trial.set_objective([(j, float(c[j])) for j in range(model.n_vars)])
        sol, warm = solve_lp(trial, warm)
        if sol.status == OPTIMAL:
            verts.append(sol.x)
    V = np.array(verts)
    out = []
    for _ in range(count):
        w = rng.dirichlet(np.ones(len(V)))
        out.append(w @ V)
    return out


# ---------------------------------------------------------------------------
# bound comparison

def cut_lp(inst: Instance, max_rounds: int = 500) -> Tuple[float, int]:
    """LP bound of the classical model with connectivity cuts separated to a fixpoint.

    Returns ``(value, number of cuts)``.
    """
    form = build_classical(inst)
    sol, state = solve_lp(form.model)
    ncuts = 0
    for _ in range(max_rounds):
        if sol.status != OPTIMAL:
            raise AnalysisError(f"cut LP ended {sol.status}")
        cuts = [c for c in form.sep(sol.x) if c.violation(sol.x) > 1e-7]
        if not cuts:
            return float(sol.objective), ncuts
        ncuts += len(cuts)
        sol, state = reoptimize_with_rows(state, cuts)
    raise AnalysisError("separation did not reach a fixpoint")


def lp_bound(inst: Instance, tag: str) -> float:
    if tag == CLASSICAL_CUT:
        return cut_lp(inst)[0]
    sol, _ = solve_lp(build(inst, tag).model)
    if sol.status != OPTIMAL:
        raise AnalysisError(f"LP relaxation of {tag} is {sol.status}")
    return float(sol.objective)


@dataclass
class TagBound:
    tag: str
    lp: Optional[float]
    milp: Optional[float] = None
    status: str = UNTESTED
    n_vars: int = 0
    n_constraints: int = 0
    n_nonzeros: int = 0
    nodes: int = 0
    cuts: int = 0
    seconds: float = 0.0


@dataclass
class Finding:
    conjecture: str
    instance: str
    lhs: Optional[float]
    rhs: Optional[float]
    verdict: str


@dataclass
class BoundReport:
    instance: str
    tags: Dict[str, TagBound]
    chain: List[Finding] = field(default_factory=list)
    conjectures: List[Finding] = field(default_factory=list)
    oracle: Optional[float] = None

    @property
    def chain_holds(self) -> bool:
        return all(f.verdict != VIOLATED for f in self.chain)

    def milp_agree(self, tol: float = 1e-6) -> bool:
        vals = [b.milp for b in self.tags.values() if b.status == OPTIMAL]
        if self.oracle is not None:
            vals.append(self.oracle)
        return all(abs(v - vals[0]) <= tol * (1 + abs(vals[0])) for v in vals)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "oracle": self.oracle,
            # wall-clock times stay out so that reruns give identical files
            "tags": {t: {k: v for k, v in asdict(b).items() if k != "seconds"} for t, b in self.tags.items()},
            "chain": [asdict(f) for f in self.chain],
            "conjectures": [asdict(f) for f in self.conjectures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _leq(name: str, inst: str, lhs: Optional[float], rhs: Optional[float], tol: float = EPS_OPT) -> Finding:
    if lhs is None or rhs is None:
        return Finding(name, inst, lhs, rhs, UNTESTED)
    ok = lhs <= rhs + tol * (1 + abs(rhs))
    return Finding(name, inst, lhs, rhs, HOLDS if ok else VIOLATED)


def _eq(name: str, inst: str, lhs: Optional[float], rhs: Optional[float], tol: float = EPS_OPT) -> Finding:
    if lhs is None or rhs is None:
        return Finding(name, inst, lhs, rhs, UNTESTED)
    ok = abs(lhs - rhs) <= tol * (1 + abs(rhs))
    return Finding(name, inst, lhs, rhs, HOLDS if ok else VIOLATED)


def compare_bounds(inst: Instance, tags: Iterable[str] = TAGS, milp: bool = True,
                   node_limit: Optional[int] = None, time_limit: Optional[float] = None,
                   oracle: Optional[float] = None) -> BoundReport:
    """LP and MILP values per formulation, the provable LP chain and conjecture findings.

    The chain ``LP(SCF) <= LP(SCF_STRONG)``, ``LP(SCF) <= cut-LP <= LP(MCF)``
    and ``LP <= MILP`` is recorded in ``report.chain``; conjectures go to
    ``report.conjectures``.  Entries whose solve runs out of budget are
    marked untested.
    """
    fp = inst.fingerprint()
    report = BoundReport(fp, {}, oracle=oracle)
    for tag in tags:
        tag = tag.upper()
        form = build(inst, tag)
        n, m, nz = model_stats(form.model)
        t0 = time.perf_counter()
        try:
            lp = lp_bound(inst, tag)
        except AnalysisError as exc:
            log.warning("%s LP: %s", tag, exc)
            lp = None
        entry = TagBound(tag, lp, n_vars=n, n_constraints=m, n_nonzeros=nz)
        if milp:
            sol = solve_milp(form.model, form.sep, node_limit=node_limit, time_limit=time_limit)
            entry.status = sol.status
            entry.milp = sol.objective if sol.status == OPTIMAL else None
            entry.nodes, entry.cuts = sol.node_count, sol.cuts_added
        entry.seconds = time.perf_counter() - t0
        report.tags[tag] = entry

    lp = {t: b.lp for t, b in report.tags.items()}
    get = lp.get
    report.chain.append(_leq("LP(SCF) <= LP(SCF_STRONG)", fp, get(SCF), get(SCF_STRONG)))
    report.chain.append(_leq("LP(SCF) <= cut-LP", fp, get(SCF), get(CLASSICAL_CUT)))
    report.chain.append(_leq("cut-LP <= LP(MCF)", fp, get(CLASSICAL_CUT), get(MCF)))
    optimum = oracle
    if optimum is None:
        solved = [b.milp for b in report.tags.values() if b.status == OPTIMAL]
        optimum = solved[0] if solved else None
    for t, v in lp.items():
        report.chain.append(_leq(f"LP({t}) <= optimum", fp, v, optimum))

    report.conjectures.append(_leq("LP(SCF_STRONG) <= cut-LP", fp, get(SCF_STRONG), get(CLASSICAL_CUT)))
    report.conjectures.append(_eq("LP(MCF) = cut-LP", fp, get(MCF), get(CLASSICAL_CUT)))
    report.conjectures.append(_leq("LP(SCF_STRONG) <= LP(TS1)", fp, get(SCF_STRONG), get(TS1)))
    report.conjectures.append(_leq("LP(TS1) <= cut-LP", fp, get(TS1), get(CLASSICAL_CUT)))
    report.conjectures.append(_eq("LP(TS1) = LP(TS2)", fp, get(TS1), get(TS2)))
    return report


def write_findings(path: str, findings: Iterable[Finding]) -> int:
    """Append findings as JSON lines; returns the number written."""
    n = 0
    with open(path, "a", encoding="utf-8") as fh:
        for f in findings:
            fh.write(json.dumps(asdict(f), sort_keys=True) + "\n")
            n += 1
    return n


def projection_suite(inst: Instance, samples: int = 10, seed: int = 0) -> List[ProjectionReport]:
    """Theorem 1, Theorem 2 and the MCF projection at the LP optimum and sampled points."""
    table = subset_table(inst)
    ranks = compute_ranks(inst)
    out = []
    for check, model in (("theorem1", build_scf(inst)), ("theorem2", build_scf_strong(inst, ranks)),
                         ("mcf_projection", build_mcf(inst))):
        points = [lp_optimum(model)] + sample_lp_points(model, samples, seed)
        for x in points:
            if check == "theorem1":
                out.append(check_theorem1(inst, x, model, table=table))
            elif check == "theorem2":
                out.append(check_theorem2(inst, x, model, ranks, table=table))
            else:
                out.append(check_mcf_projection(inst, x, model, table=table))
    return out
