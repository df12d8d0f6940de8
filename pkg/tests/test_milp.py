import math

import pytest

from stsp.formulations import build, build_mcf, build_scf, build_ts, ts2_stages
from stsp.generate import grid_corners, grid_instance, path_instance
from stsp.milp import BINARY, EQ, GE, INTEGER, LE, MAX, MIN, MilpModel, ModelError, export_mps, model_stats, parse_mps


def test_single_variable_model():
    m = MilpModel("one")
    m.add_variable("x", 0, 1)
    m.set_objective([(0, 1.0)], MIN)
    assert m.n_vars == 1 and m.n_constraints == 0


def test_duplicate_variable_rejected():
    m = MilpModel("dup")
    m.add_variable("x")
    with pytest.raises(ModelError):
        m.add_variable("x")


@pytest.mark.parametrize("bad", [
    lambda m: m.add_variable("y", 2, 1),
    lambda m: m.add_variable("y", kind="semicontinuous"),
    lambda m: m.add_constraint([(5, 1.0)], LE, 1),
    lambda m: m.add_constraint([(0, 1.0)], "<>", 1),
    lambda m: m.add_constraint([(0, math.nan)], LE, 1),
    lambda m: m.add_constraint([(0, 1.0)], LE, math.inf),
])
def test_builder_errors(bad):
    m = MilpModel("e")
    m.add_variable("x")
    with pytest.raises(ModelError):
        bad(m)


def test_finalized_model_is_frozen():
    m = MilpModel("f")
    m.add_variable("x")
    m.finalize()
    with pytest.raises(ModelError):
        m.add_variable("y")


def test_scf_path_counts():
    m = build_scf(path_instance(3, [1, 3]))
    assert m.n_vars == 8
    assert sum(name.startswith("xt_") for name in m.var_names) == 4
    assert sum(name.startswith("g_") for name in m.var_names) == 4
    # seven structural rows plus one flow/arc linking row per arc
    linking = [c for c in m.constraints if c.name.startswith("gub_")]
    assert m.n_constraints == 11 and len(linking) == 4


def test_mps_one_column():
    m = MilpModel("tiny")
    m.add_variable("x", 0, 4)
    m.set_objective([(0, 1.0)], MIN)
    text, names = export_mps(m)
    body = text.split("COLUMNS\n")[1].split("RHS")[0]
    assert len([ln for ln in body.splitlines() if ln.strip()]) == 1
    assert names == {}


def test_mps_binaries_are_bv(path3):
    text, _ = export_mps(build_scf(path3))
    bv = [ln for ln in text.splitlines() if ln.startswith(" BV ")]
    assert len(bv) == 4


def test_mps_reparse_identical_coefficients(path3):
    m = build_scf(path3)
    text, names = export_mps(m)
    back = parse_mps(text, names)
    assert back.var_names == m.var_names
    assert [(c.name, dict(c.row), c.sense, c.rhs) for c in back.constraints] == \
        [(c.name, dict(c.row), c.sense, c.rhs) for c in m.constraints]
    assert [(v.lower, v.upper, v.kind) for v in back.variables] == \
        [(v.lower, v.upper, v.kind) for v in m.variables]
    assert back.objective == m.objective and back.sense == m.sense


def test_mps_long_names_mangled_and_restored():
    m = MilpModel("long")
    a = m.add_variable("a_very_long_variable_name", 0, 3, INTEGER)
    b = m.add_variable("b", -2, math.inf)
    m.add_constraint([(a, 1.0), (b, -2.5)], GE, -1, "a_rather_long_row_name")
    m.add_constraint([(a, 1.0), (b, 1.0)], EQ, 2, "e")
    m.set_objective([(a, 3.0), (b, 1.0)], MAX)
    text, names = export_mps(m)
    assert "a_very_long_variable_name" not in text
    back = parse_mps(text, names)
    assert back.var_names == m.var_names
    assert back.sense == MAX
    assert export_mps(back)[0] == text


def test_mps_fixed_point_all_tags(path3):
    for tag in ("CLASSICAL_CUT", "SCF", "SCF_STRONG", "MCF", "TS1", "TS2"):
        text, names = export_mps(build(path3, tag).model)
        assert export_mps(parse_mps(text, names))[0] == text


def _ratio(f, small, big):
    return f(big) / f(small)


@pytest.mark.parametrize("k", [3, 4])
def test_table_orders_on_doubled_grids(k):
    small = grid_instance(k, k, required=grid_corners(k, k))
    big = grid_instance(k, 2 * k, required=grid_corners(k, 2 * k))
    e_ratio = big.edge_count / small.edge_count
    nv = lambda inst, tag: model_stats(build(inst, tag).model)[0]  # noqa: E731
    nc = lambda inst, tag: model_stats(build(inst, tag).model)[1]  # noqa: E731
    # SCF: O(|E|) variables and rows
    assert abs(math.log(_ratio(lambda i: nv(i, "SCF"), small, big) / e_ratio)) <= math.log(1.5)
    assert abs(math.log(_ratio(lambda i: nc(i, "SCF"), small, big) / e_ratio)) <= math.log(1.5)
    # MCF: n_R |E| variables with n_R fixed at the four corners
    assert abs(math.log(_ratio(lambda i: nv(i, "MCF"), small, big) / e_ratio)) <= math.log(1.5)
    # TS2: |E| (|V|-1) variables
    vts = lambda i: i.edge_count * (i.node_count - 1)  # noqa: E731
    assert abs(math.log(_ratio(lambda i: nv(i, "TS2"), small, big) / _ratio(vts, small, big))) <= math.log(1.5)


def test_size_formulas():
    inst = grid_instance(3, 3, required=grid_corners(3, 3))
    n_r = len(inst.stsp_required)
    assert model_stats(build_scf(inst))[0] == 4 * inst.edge_count
    assert model_stats(build_mcf(inst))[0] == 2 * inst.edge_count * n_r
    assert model_stats(build_ts(inst, ts2_stages(inst)))[0] <= 2 * inst.edge_count * 2 * (inst.node_count - 1)


def test_binary_bounds_clamped():
    m = MilpModel("b")
    j = m.add_variable("y", kind=BINARY)
    assert (m.variables[j].lower, m.variables[j].upper) == (0.0, 1.0)
