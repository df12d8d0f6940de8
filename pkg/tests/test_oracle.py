import itertools

import numpy as np
import pytest

from oracles import naive_stsp
from stsp import _pykernels
from stsp.generate import random_instance
from stsp.instance import build_instance, convert_to_tsp
from stsp.oracle import (
    OracleError,
    Service,
    WalkSolution,
    brute_force_stsp,
    brute_force_stsptw,
    brute_force_variant,
    eulerian_walk,
    removable_cycle,
    tw_traversal_bound,
    verify_walk,
)

try:
    from stsp import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def test_triangle_and_path(triangle, path3):
    assert brute_force_stsp(triangle).cost == 3
    best = brute_force_stsp(path3)
    assert best.cost == 4 and best.edge_uses == (2, 2)


def test_matches_converted_tsp():
    for seed in range(10):
        inst = random_instance(seed, 7, 9)
        value, _ = convert_to_tsp(inst).optimal_tour()
        assert brute_force_stsp(inst).cost == value


def test_matches_naive_enumeration():
    for seed in range(10):
        inst = random_instance(seed + 50, 7, 9)
        edges = [(e.u, e.v, e.cost) for e in inst.edges]
        value, x = naive_stsp(inst.node_count, edges, inst.stsp_required)
        best = brute_force_stsp(inst)
        assert best.cost == value
        # ties go to the lexicographically smallest vector, as in the naive scan
        assert best.edge_uses == x


@pytest.mark.skipif(_ckernels is None, reason="compiled kernel not built")
def test_compiled_kernel_matches_python():
    for seed in range(15):
        inst = random_instance(seed, 8, 11)
        args = (inst.node_count, [e.u for e in inst.edges], [e.v for e in inst.edges],
                [float(e.cost) for e in inst.edges], sorted(inst.stsp_required))
        for cap in (-1, 2 * (inst.node_count - 1), 4):
            assert _ckernels.min_edge_uses(*args, cap) == _pykernels.min_edge_uses(*args, cap)


def test_eulerian_examples(path3, triangle):
    assert eulerian_walk(path3, [2, 2]) == [(1, 2), (2, 3), (3, 2), (2, 1)]
    walk = eulerian_walk(triangle, [1, 1, 1])
    assert len(walk) == 3 and walk[0][0] == walk[-1][1] == 1
    with pytest.raises(ValueError):
        eulerian_walk(path3, [1, 1])


def test_random_even_connected_walks_verify():
    # random closed walks give even, connected edge-use vectors
    rng = np.random.default_rng(1)
    checked = 0
    for seed in range(30):
        inst = random_instance(seed, 8, 11, n_required=2)
        node, x = 1, [0] * inst.edge_count
        for _ in range(40):
            nbrs = inst.neighbors(node)
            node, e = nbrs[int(rng.integers(len(nbrs)))]
            x[e] += 1
            if node == 1:
                break
        if node != 1:
            continue
        walk = eulerian_walk(inst, x)
        inst = inst.with_required({1} | {j for _, j in walk})
        sol = WalkSolution(tuple(x), walk, inst.cost_of(x))
        assert verify_walk(inst, sol).ok
        checked += 1
    assert checked > 10


def test_verify_catches_missing_node(path3):
    sol = WalkSolution((2, 0), [(1, 2), (2, 1)], 2)
    report = verify_walk(path3, sol)
    assert not report.ok and report.first == "coverage"


def test_verify_catches_bad_cost_and_uses(path3):
    good = brute_force_stsp(path3)
    assert not verify_walk(path3, WalkSolution(good.edge_uses, good.walk, 5)).ok
    assert verify_walk(path3, WalkSolution((2, 1), good.walk, 4)).first == "uses"


def test_verify_window(tw4):
    best = brute_force_stsptw(tw4)
    assert best.cost == 8
    assert best.service_order == (2, 3, 4)
    assert best.edge_uses == (4, 2, 2)
    assert verify_walk(tw4, best, "STSPTW").ok
    # move the service at node 3 one time unit earlier
    schedule = [s._replace(start=2) if s.node == 3 else s for s in best.schedule]
    moved = WalkSolution(best.edge_uses, best.walk, best.cost, best.selected, best.objective, schedule)
    report = verify_walk(tw4, moved, "STSPTW")
    assert not report.ok and report.first == "window"


def test_verify_service_before_arrival(tw4):
    best = brute_force_stsptw(tw4)
    schedule = list(best.schedule)
    schedule[0] = Service(schedule[0].step, schedule[0].node, schedule[0].start - 1)
    report = verify_walk(tw4, WalkSolution(best.edge_uses, best.walk, best.cost, schedule=schedule), "STSPTW")
    assert not report.ok


def test_tw_oracle_bound(tw4):
    assert tw_traversal_bound(tw4) == (3 + 1) * (4 - 1)
    with pytest.raises(OracleError):
        brute_force_stsptw(tw4, max_traversals=7)


def test_variant_empty_budget():
    inst = build_instance(3, [(1, 2, 1), (2, 3, 1)], [2, 3], revenue={2: 5, 3: 5}, budget=0)
    best = brute_force_variant(inst, "SOP")
    assert best.objective == 0 and best.selected == frozenset()


def test_theorem3_restriction_on_random_graphs():
    for seed in range(15):
        inst = random_instance(seed + 200, 8, 11)
        full = brute_force_stsp(inst).cost
        assert brute_force_stsp(inst, max_traversals=2 * (inst.node_count - 1)).cost == full


def _touched(inst, x):
    return {i for e, k in enumerate(x) if k for i in (inst.edges[e].u, inst.edges[e].v)}


def test_removable_cycle_exists_above_bound():
    rng = np.random.default_rng(5)
    found = 0
    for seed in range(40):
        inst = random_instance(seed, 6, 9, n_required=2)
        x = [int(k) for k in rng.integers(0, 3, size=inst.edge_count)]
        touched = _touched(inst, x)
        if not touched or not _connected(inst, x, touched):
            continue
        if sum(x) > 2 * (len(touched) - 1):
            cyc = removable_cycle(inst, x)
            assert cyc is not None
            y = list(x)
            for e in cyc:
                y[e] -= 1
            assert min(y) >= 0 and _connected(inst, y, touched)
            found += 1
    assert found > 5


def _connected(inst, x, nodes):
    adj = {i: set() for i in nodes}
    for e, k in enumerate(x):
        if k:
            adj[inst.edges[e].u].add(inst.edges[e].v)
            adj[inst.edges[e].v].add(inst.edges[e].u)
    start = next(iter(nodes))
    seen, stack = {start}, [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == set(nodes)


def test_relabel_and_reorder_invariance():
    rng = np.random.default_rng(2)
    for seed in range(8):
        inst = random_instance(seed, 7, 9)
        perm = [1] + list(rng.permutation(np.arange(2, inst.node_count + 1)))
        relabel = {old: int(new) for old, new in zip(inst.nodes, perm)}
        edges = [(relabel[e.u], relabel[e.v], e.cost) for e in inst.edges]
        order = rng.permutation(len(edges))
        other = build_instance(inst.node_count, [edges[k] for k in order],
                               {relabel[i] for i in inst.required})
        assert brute_force_stsp(other).cost == brute_force_stsp(inst).cost


def test_lexicographic_tie_break():
    # unit square, opposite corners required: the cycle and both out-and-back walks cost 4
    inst = build_instance(4, [(1, 2, 1), (2, 3, 1), (3, 4, 1), (1, 4, 1)], [1, 3])
    best = brute_force_stsp(inst)
    ties = [x for x in itertools.product((0, 1, 2), repeat=4)
            if inst.cost_of(list(x)) == best.cost and _is_feasible(inst, x)]
    assert len(ties) == 3
    assert best.edge_uses == min(ties)


def _is_feasible(inst, x):
    try:
        walk = eulerian_walk(inst, x)
    except ValueError:
        return False
    return inst.stsp_required <= {1} | {j for _, j in walk}


def test_pure_python_switch():
    import os
    import subprocess
    import sys

    code = "import stsp.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, STSP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
