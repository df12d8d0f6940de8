"""Property tests over generated instances and models."""
import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import naive_stsp, random_lp
from stsp.formulations import build
from stsp.generate import random_instance
from stsp.instance import build_instance, format_instance, parse_instance
from stsp.lp import OPTIMAL, reoptimize_with_rows, solve_lp
from stsp.milp import EQ, GE, INTEGER, LE, MAX, MIN, Constraint, MilpModel, export_mps, parse_mps
from stsp.oracle import brute_force_stsp, eulerian_walk, verify_walk

FAST = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])

small_instances = st.builds(
    random_instance,
    seed=st.integers(0, 10_000),
    n_nodes=st.integers(3, 7),
    n_edges=st.integers(2, 9),
)


@FAST
@given(small_instances)
def test_format_parse_round_trip(inst):
    text = format_instance(inst)
    assert parse_instance(text) == inst
    assert format_instance(parse_instance(text)) == text


@FAST
@given(small_instances)
def test_oracle_agrees_with_naive_scan_and_theorem3(inst):
    edges = [(e.u, e.v, e.cost) for e in inst.edges]
    value, _ = naive_stsp(inst.node_count, edges, inst.stsp_required)
    best = brute_force_stsp(inst)
    assert best.cost == value
    assert verify_walk(inst, best).ok
    assert brute_force_stsp(inst, max_traversals=2 * (inst.node_count - 1)).cost == value


@FAST
@given(small_instances, st.randoms(use_true_random=False))
def test_oracle_ignores_edge_order(inst, rnd):
    edges = [(e.u, e.v, e.cost) for e in inst.edges]
    rnd.shuffle(edges)
    shuffled = build_instance(inst.node_count, edges, inst.required)
    assert brute_force_stsp(shuffled).cost == brute_force_stsp(inst).cost


@FAST
@given(small_instances)
def test_eulerian_walk_realises_doubled_edges(inst):
    # doubled edges give even degrees; a connected doubled support is a closed walk
    x = [2 if k % 2 == 0 else 0 for k in range(inst.edge_count)]
    touched = {i for e, k in enumerate(x) if k for i in (inst.edges[e].u, inst.edges[e].v)}
    try:
        walk = eulerian_walk(inst, x)
    except ValueError:
        return
    assert {i for a in walk for i in a} == touched
    counts = [0] * inst.edge_count
    for i, j in walk:
        counts[inst.edge_id(i, j)] += 1
    assert counts == x


@st.composite
def milp_models(draw):
    n = draw(st.integers(1, 6))
    m = MilpModel("h")
    for j in range(n):
        lo = draw(st.sampled_from([0.0, -2.0, -math.inf, 1.0]))
        hi = draw(st.sampled_from([math.inf, 5.0, 1.0, 3.5]))
        if lo > hi:
            lo, hi = hi, lo
        kind = draw(st.sampled_from(["continuous", "integer", "binary"]))
        if kind == "binary":
            lo, hi = 0.0, 1.0
        name = draw(st.sampled_from(["x", "a_longer_name", "y"])) + str(j)
        m.add_variable(name, lo, hi, kind)
    for i in range(draw(st.integers(0, 5))):
        cols = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
        coef = draw(st.lists(st.floats(-50, 50, allow_nan=False).map(lambda v: round(v, 3)),
                             min_size=len(cols), max_size=len(cols)))
        m.add_constraint(list(zip(cols, coef)), draw(st.sampled_from([LE, GE, EQ])),
                         round(draw(st.floats(-20, 20)), 2), f"row{i}" * draw(st.integers(1, 3)))
    obj = draw(st.lists(st.integers(-5, 5), min_size=n, max_size=n))
    m.set_objective(list(enumerate(map(float, obj))), draw(st.sampled_from([MIN, MAX])))
    return m


@FAST
@given(milp_models())
def test_mps_fixed_point(model):
    text, names = export_mps(model)
    back = parse_mps(text, names)
    assert back.var_names == model.var_names
    assert export_mps(back) == (text, names)


@FAST
@given(st.integers(0, 500), st.integers(0, 1000))
def test_added_row_never_lowers_min_optimum(seed, cut_seed):
    model = random_lp(seed, max_size=12)
    sol, state = solve_lp(model)
    if sol.status != OPTIMAL:
        return
    rng = np.random.default_rng(cut_seed)
    cols = rng.choice(model.n_vars, size=min(3, model.n_vars), replace=False)
    row = tuple((int(j), float(rng.integers(-3, 4) or 1)) for j in cols)
    activity = sum(c * sol.x[j] for j, c in row)
    new = Constraint("extra", row, GE, float(round(activity + rng.random(), 3)))
    again, _ = reoptimize_with_rows(state, [new])
    if again.status != OPTIMAL:
        return
    if model.sense == MIN:
        assert again.objective >= sol.objective - 1e-7 * (1 + abs(sol.objective))
    else:
        assert again.objective <= sol.objective + 1e-7 * (1 + abs(sol.objective))


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["SCF", "SCF_STRONG", "MCF", "TS2", "CLASSICAL_CUT"]))
def test_milp_optimum_equals_oracle(seed, tag):
    from stsp.bnb import solve_milp

    inst = random_instance(seed, 6, 8)
    form = build(inst, tag)
    assert solve_milp(form.model, form.sep).objective == brute_force_stsp(inst).cost


def test_integer_variable_mps_marker():
    m = MilpModel("i")
    m.add_variable("k", 0, 7, INTEGER)
    m.set_objective([(0, 1.0)])
    text, _ = export_mps(m)
    assert "'INTORG'" in text and " UP BND       k" in text
