"""Solver-independent MILP models and fixed-format MPS I/O."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

# global tolerances
EPS_INT = 1e-6
EPS_FEAS = 1e-7
EPS_OPT = 1e-7
EPS_GAP = 1e-6

CONTINUOUS, BINARY, INTEGER = "continuous", "binary", "integer"
LE, GE, EQ = "<=", ">=", "="
MIN, MAX = "min", "max"

_SENSES = {LE, GE, EQ}
_KINDS = {CONTINUOUS, BINARY, INTEGER}


class ModelError(ValueError):
    pass


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    kind: str = CONTINUOUS

    @property
    def is_integer(self) -> bool:
        return self.kind != CONTINUOUS


@dataclass
class Constraint:
    name: str
    row: Tuple[Tuple[int, float], ...]
    sense: str
    rhs: float

    def activity(self, x: Sequence[float]) -> float:
        return sum(c * x[j] for j, c in self.row)

    def violation(self, x: Sequence[float]) -> float:
        lhs = self.activity(x)
        if self.sense == LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


Row = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


def _check_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ModelError(f"non-finite {what}: {value}")
    return value


@dataclass
class MilpModel:
    """Variables with bounds and kinds, sparse linear rows, linear objective."""

    name: str = "model"
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    objective: Dict[int, float] = field(default_factory=dict)
    sense: str = MIN
    provenance: Dict[str, str] = field(default_factory=dict)
    _var_names: Dict[str, int] = field(default_factory=dict, repr=False)
    _con_names: Dict[str, int] = field(default_factory=dict, repr=False)
    _frozen: bool = field(default=False, repr=False)

    # -- building -----------------------------------------------------------
    def _mutable(self):
        if self._frozen:
            raise ModelError("model is finalized")

    def add_variable(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        kind: str = CONTINUOUS,
        obj: float = 0.0,
    ) -> int:
        self._mutable()
        if kind not in _KINDS:
            raise ModelError(f"unknown variable kind {kind!r}")
        if name in self._var_names:
            raise ModelError(f"duplicate variable name {name!r}")
        if not name or any(ch.isspace() for ch in name):
            raise ModelError(f"invalid variable name {name!r}")
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper) or lower == math.inf or upper == -math.inf or lower > upper:
            raise ModelError(f"invalid bounds for {name}: [{lower}, {upper}]")
        if kind == BINARY:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        idx = len(self.variables)
        self.variables.append(Variable(name, lower, upper, kind))
        self._var_names[name] = idx
        if obj:
            self.objective[idx] = _check_finite(obj, "objective coefficient")
        return idx

    def add_constraint(self, row: Row, sense: str, rhs: float, name: Optional[str] = None) -> int:
        self._mutable()
        if sense not in _SENSES:
            raise ModelError(f"unknown constraint sense {sense!r}")
        if name is None:
            name = f"c{len(self.constraints)}"
        if name in self._con_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        merged: Dict[int, float] = {}
        items = row.items() if isinstance(row, Mapping) else row
        for j, c in items:
            if not isinstance(j, (int, np.integer)) or not 0 <= j < len(self.variables):
                raise ModelError(f"constraint {name!r} references unknown variable index {j!r}")
            merged[int(j)] = merged.get(int(j), 0.0) + _check_finite(c, f"coefficient in {name}")
        cons = Constraint(name, tuple((j, c) for j, c in merged.items() if c != 0.0), sense,
                          _check_finite(rhs, f"rhs of {name}"))
        idx = len(self.constraints)
        self.constraints.append(cons)
        self._con_names[name] = idx
        return idx

    def set_objective(self, row: Row, sense: str = MIN) -> None:
        self._mutable()
        if sense not in (MIN, MAX):
            raise ModelError(f"unknown objective sense {sense!r}")
        items = row.items() if isinstance(row, Mapping) else row
        obj: Dict[int, float] = {}
        for j, c in items:
            if not 0 <= j < len(self.variables):
                raise ModelError(f"objective references unknown variable index {j}")
            obj[j] = obj.get(j, 0.0) + _check_finite(c, "objective coefficient")
        self.objective = {j: c for j, c in obj.items() if c != 0.0}
        self.sense = sense

    def finalize(self) -> "MilpModel":
        self._frozen = True
        return self

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name, [Variable(**vars(v)) for v in self.variables],
                      list(self.constraints), dict(self.objective), self.sense, dict(self.provenance))
        m._var_names = dict(self._var_names)
        m._con_names = dict(self._con_names)
        return m

    # -- queries ------------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def var(self, name: str) -> int:
        return self._var_names[name]

    def has_var(self, name: str) -> bool:
        return name in self._var_names

    def constraint(self, name: str) -> int:
        return self._con_names[name]

    @property
    def var_names(self) -> List[str]:
        return [v.name for v in self.variables]

    @property
    def integer_indices(self) -> List[int]:
        return [j for j, v in enumerate(self.variables) if v.is_integer]

    def objective_value(self, x: Sequence[float]) -> float:
        return sum(c * x[j] for j, c in self.objective.items())

    def max_violation(self, x: Sequence[float]) -> float:
        """Largest bound or row violation at ``x``."""
        worst = 0.0
        for j, v in enumerate(self.variables):
            worst = max(worst, v.lower - x[j], x[j] - v.upper)
        for con in self.constraints:
            worst = max(worst, con.violation(x))
        return worst

    def values_by_name(self, x: Sequence[float]) -> Dict[str, float]:
        return {v.name: float(x[j]) for j, v in enumerate(self.variables)}

    def dense(self):
        """Arrays ``(c, A, row_lo, row_hi, col_lo, col_hi)`` in minimisation form."""
        n, m = self.n_vars, self.n_constraints
        c = np.zeros(n)
        for j, v in self.objective.items():
            c[j] = v
        if self.sense == MAX:
            c = -c
        A = np.zeros((m, n))
        lo = np.full(m, -np.inf)
        hi = np.full(m, np.inf)
        for i, con in enumerate(self.constraints):
            for j, a in con.row:
                A[i, j] = a
            if con.sense in (GE, EQ):
                lo[i] = con.rhs
            if con.sense in (LE, EQ):
                hi[i] = con.rhs
        col_lo = np.array([v.lower for v in self.variables], dtype=float)
        col_hi = np.array([v.upper for v in self.variables], dtype=float)
        return c, A, lo, hi, col_lo, col_hi


def model_stats(model: MilpModel) -> Tuple[int, int, int]:
    """``(n_vars, n_constraints, n_nonzeros)`` of the constraint matrix."""
    return model.n_vars, model.n_constraints, sum(len(c.row) for c in model.constraints)


# ---------------------------------------------------------------------------
# fixed-format MPS

_OBJ_ROW = "OBJ"
_MPS_NAME = re.compile(r"^\S{1,8}$")


def _fixed_ok(name: str) -> bool:
    return bool(_MPS_NAME.match(name)) and name != _OBJ_ROW


def _mps_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e11:
        return str(int(x))
    for prec in range(17, 0, -1):
        s = f"{x:.{prec}g}"
        if len(s) <= 12:
            return s
    raise ModelError(f"cannot format {x!r} in 12 columns")


def _mangle(names: Sequence[str], prefix: str, taken: set) -> Tuple[List[str], Dict[str, str]]:
    out, mapping = [], {}
    counter = 0
    for name in names:
        if _fixed_ok(name) and name not in taken:
            taken.add(name)
            out.append(name)
            continue
        while True:
            counter += 1
            cand = f"{prefix}{counter:07d}"
            if cand not in taken and cand not in names:
                break
        taken.add(cand)
        mapping[cand] = name
        out.append(cand)
    return out, mapping


def _line(code: str, f1: str = "", f2: str = "", v1: str = "", f3: str = "", v2: str = "") -> str:
    # columns: 2-3 code, 5-12 name, 15-22 name, 25-36 value, 40-47 name, 50-61 value
    s = f" {code:<2} {f1:<8}  {f2:<8}  {v1:>12}"
    if f3:
        s += f"   {f3:<8}  {v2:>12}"
    return s.rstrip()


def export_mps(model: MilpModel) -> Tuple[str, Dict[str, str]]:
    """Write ``model`` as fixed-format MPS.

    Names that do not fit in eight columns are replaced by ``C0000001``-style
    column names and ``R0000001``-style row names.  The returned mapping
    ``{mangled: original}`` is empty when nothing had to be renamed.
    """
    taken = {_OBJ_ROW}
    cols, cmap = _mangle([v.name for v in model.variables], "C", taken)
    rows, rmap = _mangle([c.name for c in model.constraints], "R", taken)
    name = model.name if _fixed_ok(model.name) else "MODEL"

    out = [f"NAME          {name}"]
    if model.sense == MAX:
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(_line("N", _OBJ_ROW))
    code = {LE: "L", GE: "G", EQ: "E"}
    for r, con in zip(rows, model.constraints):
        out.append(_line(code[con.sense], r))

    by_col: List[List[Tuple[str, float]]] = [[] for _ in model.variables]
    for j, c in model.objective.items():
        by_col[j].append((_OBJ_ROW, c))
    for r, con in zip(rows, model.constraints):
        for j, a in con.row:
            by_col[j].append((r, a))

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, (cname, var) in enumerate(zip(cols, model.variables)):
        if var.is_integer != in_int:
            tag = "'INTORG'" if var.is_integer else "'INTEND'"
            out.append(_line("", f"MARKER{marker:02d}", "'MARKER'", "", tag))
            marker += 1
            in_int = var.is_integer
        entries = sorted(by_col[j], key=lambda t: (t[0] != _OBJ_ROW,)) or [(_OBJ_ROW, 0.0)]
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", cname, pair[0][0], _mps_number(pair[0][1]),
                                 pair[1][0], _mps_number(pair[1][1])))
            else:
                out.append(_line("", cname, pair[0][0], _mps_number(pair[0][1])))
    if in_int:
        out.append(_line("", f"MARKER{marker:02d}", "'MARKER'", "", "'INTEND'"))

    out.append("RHS")
    for r, con in zip(rows, model.constraints):
        if con.rhs != 0.0:
            out.append(_line("", "RHS", r, _mps_number(con.rhs)))

    out.append("BOUNDS")
    for cname, var in zip(cols, model.variables):
        lo, hi = var.lower, var.upper
        if var.kind == BINARY and lo == 0.0 and hi == 1.0:
            out.append(_line("BV", "BND", cname))
            continue
        if lo == hi:
            out.append(_line("FX", "BND", cname, _mps_number(lo)))
            continue
        if lo == -math.inf and hi == math.inf:
            out.append(_line("FR", "BND", cname))
            continue
        if lo == -math.inf:
            out.append(_line("MI", "BND", cname))
        elif lo != 0.0 or var.is_integer:
            out.append(_line("LO", "BND", cname, _mps_number(lo)))
        if hi != math.inf:
            out.append(_line("UP", "BND", cname, _mps_number(hi)))
        elif var.is_integer:
            out.append(_line("PL", "BND", cname))
    out.append("ENDATA")
    return "\n".join(out) + "\n", {**cmap, **rmap}


def parse_mps(text: str, names: Optional[Mapping[str, str]] = None) -> MilpModel:
    """Read fixed-format MPS as written by :func:`export_mps`.

    Fields are split on whitespace, so names must not contain blanks.
    ``names`` optionally maps mangled names back to the originals.
    """
    names = dict(names or {})
    model = MilpModel()
    section = None
    row_sense: Dict[str, str] = {}
    row_order: List[str] = []
    row_coefs: Dict[str, List[Tuple[int, float]]] = {}
    rhs: Dict[str, float] = {}
    obj_row = None
    integer = False
    col_kind: Dict[int, str] = {}
    bounds: Dict[int, List[float]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "NAME":
                model.name = head[1] if len(head) > 1 else ""
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES", "OBJSENSE"):
                raise ModelError(f"line {lineno}: unknown MPS section {section!r}")
            continue
        f = raw.split()
        if section == "OBJSENSE":
            model.sense = MAX if f[0].upper() in ("MAX", "MAXIMIZE") else MIN
        elif section == "ROWS":
            code, rname = f
            if code == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            row_sense[rname] = {"L": LE, "G": GE, "E": EQ}[code]
            row_order.append(rname)
            row_coefs[rname] = []
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                integer = f[2] == "'INTORG'"
                continue
            cname = f[0]
            orig = names.get(cname, cname)
            if not model.has_var(orig):
                j = model.add_variable(orig)
                col_kind[j] = INTEGER if integer else CONTINUOUS
            j = model.var(orig)
            for rname, val in zip(f[1::2], f[2::2]):
                v = float(val)
                if rname == obj_row:
                    if v != 0.0:
                        model.objective[j] = v
                else:
                    row_coefs[rname].append((j, v))
        elif section == "RHS":
            for rname, val in zip(f[1::2], f[2::2]):
                if rname != obj_row:
                    rhs[rname] = float(val)
        elif section == "RANGES":
            raise ModelError(f"line {lineno}: ranged rows are not supported")
        elif section == "BOUNDS":
            code, cname = f[0], f[2]
            j = model.var(names.get(cname, cname))
            lo_hi = bounds.setdefault(j, [0.0, math.inf])
            val = float(f[3]) if len(f) > 3 else None
            if code == "BV":
                col_kind[j] = BINARY
                lo_hi[:] = [0.0, 1.0]
            elif code == "FX":
                lo_hi[:] = [val, val]
            elif code == "FR":
                lo_hi[:] = [-math.inf, math.inf]
            elif code == "MI":
                lo_hi[0] = -math.inf
            elif code == "PL":
                lo_hi[1] = math.inf
            elif code in ("LO", "LI"):
                lo_hi[0] = val
            elif code in ("UP", "UI"):
                lo_hi[1] = val
            else:
                raise ModelError(f"line {lineno}: unknown bound type {code!r}")
            if code in ("LI", "UI"):
                col_kind[j] = INTEGER

    for j, var in enumerate(model.variables):
        var.kind = col_kind.get(j, CONTINUOUS)
        lo, hi = bounds.get(j, [0.0, math.inf])
        var.lower, var.upper = lo, hi
    for rname in row_order:
        model.add_constraint(row_coefs[rname], row_sense[rname], rhs.get(rname, 0.0),
                             name=names.get(rname, rname))
    return model
