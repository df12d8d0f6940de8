import numpy as np
import pytest

from oracles import random_lp, tableau_from_model
from stsp.formulations import build, build_classical, build_scf
from stsp.generate import random_instance
from stsp.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, reoptimize_with_rows, solve_lp
from stsp.milp import EPS_OPT, GE, LE, MAX, MIN, Constraint, MilpModel


def _one_var(lo_rows):
    m = MilpModel("t")
    x = m.add_variable("x", 0, 10)
    for k, (sense, rhs) in enumerate(lo_rows):
        m.add_constraint([(x, 1.0)], sense, rhs, f"r{k}")
    m.set_objective([(x, 1.0)], MIN)
    return m


def test_min_x_at_least_three():
    sol, _ = solve_lp(_one_var([(GE, 3)]))
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(3)


def test_infeasible_pair():
    sol, _ = solve_lp(_one_var([(LE, 0), (GE, 1)]))
    assert sol.status == INFEASIBLE


def test_unbounded():
    m = MilpModel("u")
    x = m.add_variable("x", 0)
    m.set_objective([(x, 1.0)], MAX)
    assert solve_lp(m)[0].status == UNBOUNDED


def dual_objective(model, sol):
    """Lagrangian dual value from the row duals; ``None`` if the reduced costs are not dual feasible."""
    c, A, lo, hi, col_lo, col_hi = model.dense()
    y = -sol.duals if model.sense == MAX else sol.duals
    d = c - A.T @ y
    total = 0.0
    for i, yi in enumerate(y):
        if abs(yi) > 1e-9:
            total += yi * (lo[i] if yi > 0 else hi[i])
    for j, dj in enumerate(d):
        if abs(dj) > 1e-9:
            total += dj * (col_lo[j] if dj > 0 else col_hi[j])
    if not np.isfinite(total):
        return None
    return -total if model.sense == MAX else total


def test_weak_duality_random():
    for seed in range(40):
        model = random_lp(seed)
        sol, _ = solve_lp(model)
        if sol.status != OPTIMAL:
            continue
        dual = dual_objective(model, sol)
        assert dual is not None
        gap = sol.objective - dual if model.sense == MIN else dual - sol.objective
        assert gap <= EPS_OPT * (1 + abs(sol.objective))
        assert gap >= -1e-6 * (1 + abs(sol.objective))


def test_scf_relaxation_matches_tableau():
    inst = random_instance(3, 6, 9, n_required=4)
    model = build_scf(inst)
    sol, _ = solve_lp(model)
    status, value = tableau_from_model(model)
    assert sol.status == status == OPTIMAL
    assert sol.objective == pytest.approx(value, abs=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_random_lp_matches_tableau(seed):
    model = random_lp(seed)
    sol, _ = solve_lp(model)
    status, value = tableau_from_model(model)
    assert sol.status == status
    if status == OPTIMAL:
        assert abs(sol.objective - value) <= 1e-6


def test_redundant_row_keeps_objective(path3):
    model = build_scf(path3)
    sol, state = solve_lp(model)
    row = Constraint("redundant", ((0, 1.0),), LE, 5.0)
    again, _ = reoptimize_with_rows(state, [row])
    assert again.objective == pytest.approx(sol.objective)


def test_violated_cut_raises_min_objective():
    inst = random_instance(5, 7, 10, n_required=5)
    form = build_classical(inst)
    sol, state = solve_lp(form.model)
    cuts = form.sep(sol.x)
    assert cuts
    again, _ = reoptimize_with_rows(state, cuts)
    assert again.objective >= sol.objective - EPS_OPT


def test_sequential_cuts_equal_cold_solve():
    inst = random_instance(11, 8, 11, n_required=6)
    form = build_classical(inst)
    sol, state = solve_lp(form.model)
    added = []
    for _ in range(20):
        cuts = form.sep(sol.x)
        if not cuts:
            break
        cuts = cuts[:1]
        added.extend(cuts)
        sol, state = reoptimize_with_rows(state, cuts)
    assert added
    cold = form.model.copy()
    for k, c in enumerate(added):
        cold.add_constraint(c.row, c.sense, c.rhs, f"cut{k}")
    cold_sol, _ = solve_lp(cold)
    assert sol.objective == pytest.approx(cold_sol.objective, abs=1e-6)


def test_warm_start_same_answer():
    model = build(random_instance(2, 8, 11), "SCF_STRONG").model
    first, state = solve_lp(model)
    second, _ = solve_lp(model, warm=state)
    assert second.objective == pytest.approx(first.objective)
    assert second.iterations <= first.iterations


def test_degenerate_and_duplicate_rows_terminate():
    m = MilpModel("deg")
    xs = [m.add_variable(f"x{j}", 0, 1) for j in range(6)]
    for k in range(12):
        m.add_constraint([(j, 1.0) for j in xs], LE, 0, f"d{k}")
        m.add_constraint([(xs[k % 6], 1.0), (xs[(k + 1) % 6], -1.0)], LE, 0, f"z{k}")
    m.set_objective([(j, -1.0) for j in xs], MIN)
    sol, _ = solve_lp(m)
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(0.0)
