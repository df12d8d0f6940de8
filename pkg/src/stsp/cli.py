"""Command line interface.

    stsp solve    INSTANCE --tag scf [--variant sop] [--stages K] [--out sol.json]
    stsp bounds   INSTANCE [--tag scf --tag mcf ...] [--conjectures [FILE]] [--out report.json]
    stsp export   INSTANCE --tag mcf [--out model.mps]
    stsp verify   INSTANCE SOLUTION [--variant stsptw]
    stsp gen      {path,grid,random-planar,random} ARGS... [--seed S] [--required R] [--out FILE]

Exit codes: 0 optimal (or pass), 1 error / infeasible / verification failure,
2 solver budget exhausted.  ``STSP_LOG`` sets the log level.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from . import analysis
from .bnb import BUDGET_EXHAUSTED, solve_milp
from .formulations import CLASSICAL_CUT, TAGS, TS, build, extract_edge_uses
from .generate import grid_corners, grid_instance, path_instance, planar_instance, random_instance
from .instance import Instance, InstanceError, format_instance, parse_instance
from .lp import OPTIMAL
from .milp import ModelError, export_mps, model_stats
from .oracle import SCPTP, SOP, STSP, STSPTW, OracleError, Service, WalkSolution, eulerian_walk, verify_walk
from .variants import (SCPTP_TAGS, SOP_TAGS, STSPTW_TAG, build_variant, selected_customers, stsptw_walk,
                       variant_edge_uses)

log = logging.getLogger("stsp")

EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2

_ALIASES = {"CLASSICAL": CLASSICAL_CUT, "CUT": CLASSICAL_CUT}


@dataclass
class RunConfig:
    command: str
    instance: Optional[str] = None
    tags: List[str] = field(default_factory=list)
    variant: Optional[str] = None
    stages: Optional[int] = None
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None
    seed: int = 0
    out: Optional[str] = None
    conjectures: Optional[str] = None
    solution: Optional[str] = None
    family: Optional[str] = None
    sizes: Tuple[int, ...] = ()
    required: Optional[str] = None


class CliError(Exception):
    pass


def resolve_tag(tag: str, variant: Optional[str] = None) -> Tuple[str, str]:
    """Map a ``--tag``/``--variant`` pair to ``(problem, formulation tag)``."""
    t = _ALIASES.get(tag.upper(), tag.upper())
    v = variant.upper() if variant else None
    if v in (None, STSP):
        if t == STSPTW_TAG:
            return STSPTW, STSPTW_TAG
        for prob, tags in ((SOP, SOP_TAGS), (SCPTP, SCPTP_TAGS)):
            if t in tags:
                return prob, t
        if t in TAGS or t == TS:
            return STSP, t
        raise CliError(f"unknown tag {tag!r}")
    if v == STSPTW:
        if t not in (STSPTW_TAG, "TW"):
            raise CliError(f"variant STSPTW has a single formulation, got tag {tag!r}")
        return STSPTW, STSPTW_TAG
    if v in (SOP, SCPTP):
        full = t if t.startswith(v + "_") else f"{v}_{t}"
        if full not in (SOP_TAGS if v == SOP else SCPTP_TAGS):
            raise CliError(f"variant {v} has no formulation {tag!r}")
        return v, full
    raise CliError(f"unknown variant {variant!r}")


def _read_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _finite(v):
    return v if v is None or math.isfinite(v) else None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# solutions as JSON

def walk_to_dict(inst: Instance, sol: WalkSolution) -> dict:
    return {
        "edges": [[e.u, e.v] for e in inst.edges],
        "edge_uses": list(sol.edge_uses),
        "walk": [[int(i), int(j)] for i, j in sol.walk],
        "cost": sol.cost,
        "selected": sorted(int(i) for i in sol.selected),
        "objective": sol.objective,
        "schedule": [{"step": s.step, "node": int(s.node), "start": s.start} for s in sol.schedule],
    }


def walk_from_dict(data: dict) -> WalkSolution:
    schedule = [Service(int(s["step"]), int(s["node"]), float(s["start"])) for s in data.get("schedule", [])]
    return WalkSolution(tuple(int(k) for k in data["edge_uses"]), [tuple(a) for a in data["walk"]],
                        data["cost"], frozenset(data.get("selected", [])), data.get("objective"), schedule)


def _walk_of(inst: Instance, problem: str, tag: str, values) -> WalkSolution:
    if problem == STSPTW:
        return stsptw_walk(inst, values)
    if problem == STSP:
        uses = extract_edge_uses(inst, tag, values)
        return WalkSolution(tuple(uses), eulerian_walk(inst, uses), inst.cost_of(uses))
    uses = variant_edge_uses(inst, tag, values)
    chosen = selected_customers(values)
    return WalkSolution(tuple(uses), eulerian_walk(inst, uses) if any(uses) else [], inst.cost_of(uses), chosen)


# ---------------------------------------------------------------------------
# commands

def cmd_solve(cfg: RunConfig) -> int:
    inst = _read_instance(cfg.instance)
    if len(cfg.tags) != 1:
        raise CliError("solve takes exactly one --tag")
    problem, tag = resolve_tag(cfg.tags[0], cfg.variant)
    form = build(inst, tag, cfg.stages) if problem == STSP else build_variant(inst, tag, cfg.stages)
    n, m, nz = model_stats(form.model)
    log.info("%s: %d variables, %d rows, %d nonzeros", tag, n, m, nz)
    sol = solve_milp(form.model, form.sep, node_limit=cfg.node_limit, time_limit=cfg.time_limit)
    out = {
        "instance": inst.fingerprint(),
        "problem": problem,
        "tag": tag,
        "status": sol.status,
        "objective": sol.objective,
        "bound": _finite(sol.bound),
        "stats": {"nodes": sol.node_count, "cuts": sol.cuts_added, "root_bound": sol.root_bound,
                  "n_vars": n, "n_constraints": m, "n_nonzeros": nz},
    }
    if sol.x is not None:
        walk = _walk_of(inst, problem, tag, sol.incumbent)
        walk.objective = sol.objective
        out.update(walk_to_dict(inst, walk))
    _emit(_dump(out), cfg.out)
    print(f"{tag}: {sol.status}" + (f", objective {sol.objective:g}" if sol.objective is not None else ""),
          file=sys.stderr)
    if sol.status == OPTIMAL:
        return EXIT_OK
    if sol.status == BUDGET_EXHAUSTED:
        return EXIT_BUDGET
    return EXIT_ERROR


def cmd_bounds(cfg: RunConfig) -> int:
    inst = _read_instance(cfg.instance)
    tags = [resolve_tag(t)[1] for t in cfg.tags] if cfg.tags else list(TAGS)
    if any(t not in TAGS for t in tags):
        raise CliError("bounds compares STSP formulations only")
    report = analysis.compare_bounds(inst, tags, node_limit=cfg.node_limit, time_limit=cfg.time_limit)
    _emit(report.to_json() + "\n", cfg.out)
    width = max(len(t) for t in report.tags)
    lines = [f"{'tag':<{width}}  {'LP':>12}  {'MILP':>12}  {'vars':>6}  {'rows':>6}  status"]
    for t, b in report.tags.items():
        lp = "-" if b.lp is None else f"{b.lp:.6g}"
        mv = "-" if b.milp is None else f"{b.milp:.6g}"
        lines.append(f"{t:<{width}}  {lp:>12}  {mv:>12}  {b.n_vars:>6}  {b.n_constraints:>6}  {b.status}")
    for f in report.chain:
        lines.append(f"chain  {f.conjecture}: {f.verdict}")
    if cfg.conjectures:
        for f in report.conjectures:
            lines.append(f"conjecture  {f.conjecture}: {f.verdict}")
        analysis.write_findings(cfg.conjectures, report.conjectures)
    print("\n".join(lines), file=sys.stderr)
    if not report.chain_holds:
        return EXIT_ERROR
    if any(b.status == BUDGET_EXHAUSTED for b in report.tags.values()):
        return EXIT_BUDGET
    return EXIT_OK


def cmd_export(cfg: RunConfig) -> int:
    inst = _read_instance(cfg.instance)
    if len(cfg.tags) != 1:
        raise CliError("export takes exactly one --tag")
    problem, tag = resolve_tag(cfg.tags[0], cfg.variant)
    form = build(inst, tag, cfg.stages) if problem == STSP else build_variant(inst, tag, cfg.stages)
    text, names = export_mps(form.model)
    _emit(text, cfg.out)
    if names and cfg.out not in (None, "-"):
        with open(cfg.out + ".names.json", "w", encoding="utf-8") as fh:
            fh.write(_dump(names))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    inst = _read_instance(cfg.instance)
    with open(cfg.solution, encoding="utf-8") as fh:
        data = json.load(fh)
    variant = (cfg.variant or data.get("problem") or STSP).upper()
    report = verify_walk(inst, walk_from_dict(data), variant)
    if report.ok:
        print("pass")
        return EXIT_OK
    for kind, msg in report.failures:
        print(f"fail: {kind}: {msg}")
    return EXIT_ERROR


def _parse_required(spec: Optional[str], rows: int = 0, cols: int = 0) -> Optional[List[int]]:
    if spec is None:
        return None
    if spec == "corners":
        if not rows:
            raise CliError("--required corners only applies to grids")
        return grid_corners(rows, cols)
    try:
        return [int(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"bad --required list {spec!r}") from None


def cmd_gen(cfg: RunConfig) -> int:
    fam, sizes = cfg.family, cfg.sizes
    need = {"path": 1, "grid": 2, "random-planar": 2, "random": 2}
    if fam not in need:
        raise CliError(f"unknown family {fam!r}")
    if len(sizes) != need[fam]:
        raise CliError(f"{fam} takes {need[fam]} size argument(s)")
    if fam == "path":
        inst = path_instance(sizes[0], _parse_required(cfg.required) or ())
    elif fam == "grid":
        req = _parse_required(cfg.required, sizes[1], sizes[0])
        inst = grid_instance(sizes[1], sizes[0], seed=cfg.seed, required=req)
    elif fam == "random-planar":
        req = _parse_required(cfg.required)
        inst = planar_instance(sizes[0], max(2, sizes[0] // 2), cfg.seed, n_edges=sizes[1], required=req)
    else:
        inst = random_instance(cfg.seed, sizes[0], sizes[1])
        if cfg.required:
            inst = inst.with_required(set(_parse_required(cfg.required)) | {1})
    _emit(format_instance(inst), cfg.out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bounds": cmd_bounds, "export": cmd_export, "verify": cmd_verify, "gen": cmd_gen}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stsp", description="Steiner TSP formulations, solver and checks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tags=True):
        if tags:
            sp.add_argument("--tag", action="append", default=[], help="formulation tag")
            sp.add_argument("--variant", help="SOP, SCPTP or STSPTW")
            sp.add_argument("--stages", type=int, help="stage count for TS formulations")
        sp.add_argument("--node-limit", type=int)
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output file (default: standard output)")

    sp = sub.add_parser("solve", help="solve one formulation")
    sp.add_argument("instance")
    common(sp)
    sp = sub.add_parser("bounds", help="LP and MILP values of several formulations")
    sp.add_argument("instance")
    common(sp)
    sp.add_argument("--conjectures", nargs="?", const="findings.jsonl", default=None,
                    help="append conjecture findings to this JSON-lines file")
    sp = sub.add_parser("export", help="write a formulation as fixed MPS")
    sp.add_argument("instance")
    common(sp)
    sp = sub.add_parser("verify", help="check a solution file")
    sp.add_argument("instance")
    sp.add_argument("solution")
    sp.add_argument("--variant")
    sp = sub.add_parser("gen", help="generate an instance")
    sp.add_argument("family", choices=["path", "grid", "random-planar", "random"])
    sp.add_argument("sizes", type=int, nargs="+")
    sp.add_argument("--required", help="comma list of nodes, or 'corners' for grids")
    common(sp, tags=False)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    get = lambda k, d=None: getattr(ns, k, d)  # noqa: E731
    return RunConfig(
        command=ns.command, instance=get("instance"), tags=list(get("tag", []) or []), variant=get("variant"),
        stages=get("stages"), node_limit=get("node_limit"), time_limit=get("time_limit"), seed=get("seed", 0),
        out=get("out"), conjectures=get("conjectures"), solution=get("solution"), family=get("family"),
        sizes=tuple(get("sizes", ()) or ()), required=get("required"),
    )


def _setup_logging() -> None:
    level = os.environ.get("STSP_LOG", "error").upper()
    if level not in ("ERROR", "INFO", "DEBUG", "WARNING"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    ns = build_parser().parse_args(argv)
    cfg = config_from_args(ns)
    try:
        return COMMANDS[cfg.command](cfg)
    except (CliError, InstanceError, ModelError, OracleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
