import math

import pytest

from oracles import bellman_ford, path_ranks
from conftest import PATH3_TEXT
from stsp.generate import random_instance, path_instance
from stsp.instance import (
    InstanceError,
    arc_expand,
    build_instance,
    compute_ranks,
    convert_to_tsp,
    format_instance,
    parse_instance,
    shortest_paths,
    walk_edge_uses,
)
from stsp.oracle import brute_force_stsp


def test_parse_path():
    inst = parse_instance(PATH3_TEXT)
    assert inst.node_count == 3
    assert inst.edge_count == 2
    assert inst.required == frozenset({1, 3})


def test_parse_negative_weight_reports_position():
    text = PATH3_TEXT.replace("edge 2 3 1", "edge 2 3 -1")
    with pytest.raises(InstanceError, match="negative") as info:
        parse_instance(text)
    assert info.value.line == 4


@pytest.mark.parametrize("text", [
    "nodes 3\nrequired 1 4\nedge 1 2 1\nedge 2 3 1\n",
    "nodes 3\nrequired 1 3\nedge 1 2 1\nedge 1 2 1\nedge 2 3 1\n",
    "nodes 3\nrequired 1 3\nedge 1 1 1\nedge 2 3 1\n",
    "nodes 3\nrequired 1 3\nedge 1 2 x\n",
    "nodes 3\nrequired 1 3\nedge 1 2 1\n",
    "required 1 3\nedge 1 2 1\n",
    "nodes 3\nrequired 1 3\nbogus 1\n",
])
def test_parse_rejects(text):
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_timed_instance_parses(tw4):
    text = format_instance(tw4)
    back = parse_instance(text)
    assert back.windows == {2: (1, 1), 3: (3, 3), 4: (6, 6)}
    assert back.horizon == 10
    assert all(back.window(i)[1] <= back.horizon for i in (2, 3, 4))
    assert format_instance(back) == text


def test_format_round_trip_random():
    for seed in range(10):
        inst = random_instance(seed, 8, 11)
        assert parse_instance(format_instance(inst)) == inst


def test_stray_component_pruned():
    inst = build_instance(5, [(1, 2, 1), (2, 3, 1), (4, 5, 1)], [1, 3])
    assert inst.node_count == 3
    assert inst.labels == (1, 2, 3)


def test_arc_expand_counts(path3, triangle, tw4):
    assert len(arc_expand(path3).arcs) == 4
    arcs = arc_expand(triangle)
    assert len(arcs.arcs) == 6
    for a, (i, j) in enumerate(arcs.arcs):
        e = arcs.arc_edge[a]
        assert triangle.edges[e].cost == arcs.cost[a]
        assert {i, j} == {triangle.edges[e].u, triangle.edges[e].v}
    assert len(arc_expand(tw4).arcs) == 6


def test_shortest_paths_path(path3):
    assert shortest_paths(path3, 1) == {1: 0, 2: 1, 3: 2}
    assert shortest_paths(path3, 1, "required") == {1: 0, 2: 0, 3: 1}


def test_shortest_paths_match_bellman_ford():
    for seed in range(10):
        inst = random_instance(seed, 8, 11)
        edges = [(e.u, e.v, e.cost) for e in inst.edges]
        for s in inst.nodes:
            bf = bellman_ford(inst.node_count, edges, s)
            got = shortest_paths(inst, s)
            assert all(math.isclose(got[i], bf[i]) for i in inst.nodes)


def test_ranks_small_cases(path3):
    r = compute_ranks(path3)
    assert (r[1], r[2], r[3]) == (0, 0, 1)
    star = build_instance(5, [(1, k, 1) for k in range(2, 6)], [1, 2, 3, 4, 5])
    assert all(compute_ranks(star)[k] == 1 for k in range(2, 6))


def test_ranks_match_path_enumeration():
    for seed in range(8):
        inst = random_instance(seed, 10, 14)
        brute = path_ranks(inst.node_count, [(e.u, e.v) for e in inst.edges], inst.required)
        r = compute_ranks(inst)
        assert all(r[i] == brute[i] for i in inst.nodes if i != 1)


def test_convert_path(path3):
    tsp = convert_to_tsp(path3)
    assert tsp.nodes == (1, 3)
    assert tsp.cost[1, 3] == 2
    assert tsp.paths[1, 3] == (1, 2, 3)


def test_convert_triangle_is_identity(triangle):
    tsp = convert_to_tsp(triangle)
    assert {k: v for k, v in tsp.cost.items()} == {
        (i, j): 1 for i in (1, 2, 3) for j in (1, 2, 3) if i != j}


def test_converted_tour_matches_oracle():
    for seed in range(10):
        inst = random_instance(seed, 8, 11, n_required=4)
        value, tour = convert_to_tsp(inst).optimal_tour()
        assert value == brute_force_stsp(inst).cost
        walk = convert_to_tsp(inst).expand(tour)
        assert inst.cost_of(walk_edge_uses(inst, walk)) == value


def test_disconnected_required_rejected():
    with pytest.raises(InstanceError):
        build_instance(4, [(1, 2, 1), (3, 4, 1)], [1, 4], prune=False)


def test_path_generator_default_required():
    assert path_instance(4).required == frozenset({1, 4})
