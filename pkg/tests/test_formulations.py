import pytest

from conftest import solve_tag
from stsp.analysis import lp_bound
from stsp.bnb import solve_milp
from stsp.formulations import (
    MCF,
    SCF,
    SCF_STRONG,
    TAGS,
    build,
    build_scf_strong,
    build_ts,
    extract_edge_uses,
    ts1_stages,
    ts2_stages,
)
from stsp.generate import random_instance
from stsp.instance import build_instance, compute_ranks
from stsp.oracle import brute_force_stsp, eulerian_walk


def test_triangle_classical(triangle):
    assert solve_tag(triangle, "CLASSICAL_CUT").objective == 3


@pytest.mark.parametrize("tag", TAGS)
def test_path_instance_all_tags(path3, tag):
    sol = solve_tag(path3, tag)
    assert sol.objective == 4
    assert extract_edge_uses(path3, tag, sol.incumbent) == [2, 2]


def test_ts2_path_uses_four_stages(path3):
    assert ts2_stages(path3) == 4
    assert ts1_stages(path3) == 4


def test_ts_two_stages_infeasible(path3):
    assert solve_milp(build_ts(path3, 2)).status == "infeasible"


def test_depot_only_is_zero():
    inst = build_instance(3, [(1, 2, 1), (2, 3, 1)], [1])
    for tag in TAGS:
        sol = solve_tag(inst, tag)
        assert sol.objective == 0
        assert sum(extract_edge_uses(inst, tag, sol.incumbent)) == 0


def test_scf_strong_bound_on_last_node(path3):
    model = build_scf_strong(path3, compute_ranks(path3))
    row = model.constraints[model.constraint("gub_3_2")]
    assert dict(row.row) == {model.var("g_3_2"): 1.0}
    assert row.rhs == 0


def test_extract_scf_and_ts(path3):
    assert extract_edge_uses(path3, SCF, {"xt_1_2": 1, "xt_2_1": 1, "g_1_2": 1}) == [2, 0]
    assert extract_edge_uses(path3, "TS2", {"r_1_2_1": 1, "r_2_1_4": 1}) == [2, 0]
    with pytest.raises(ValueError):
        extract_edge_uses(path3, SCF, {"xt_1_2": 0.5})


def test_strong_never_weaker_and_same_optimum():
    for seed in range(10):
        inst = random_instance(seed, 7, 10)
        assert lp_bound(inst, SCF_STRONG) >= lp_bound(inst, SCF) - 1e-7
        assert solve_tag(inst, SCF).objective == solve_tag(inst, SCF_STRONG).objective


def test_extracted_solutions_are_walks():
    for seed in range(10):
        inst = random_instance(seed + 100, 7, 10)
        opt = brute_force_stsp(inst).cost
        for tag in (SCF, MCF, "TS2", "CLASSICAL_CUT"):
            sol = solve_tag(inst, tag)
            x = extract_edge_uses(inst, tag, sol.incumbent)
            assert inst.cost_of(x) == sol.objective == opt
            walk = eulerian_walk(inst, x)
            assert inst.stsp_required <= {1} | {j for _, j in walk}


def test_variable_naming_contract(path3):
    names = {tag: set(build(path3, tag).model.var_names) for tag in TAGS}
    assert names["CLASSICAL_CUT"] == {"x_1_2", "x_2_3", "z_1", "z_2", "z_3"}
    assert {"xt_1_2", "g_1_2"} <= names[SCF]
    assert {"xt_1_2", "f_1_2_3"} <= names[MCF]
    assert {"r_1_2_1", "r_3_2_4"} <= names["TS2"]


def test_unknown_tag(path3):
    with pytest.raises(ValueError):
        build(path3, "MTZ")
