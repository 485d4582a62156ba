"""Graph construction, path encodings, validation, and routing."""

import json

import numpy as np
import pytest

from ipplan import (
    InfeasibleBudgetError,
    PathEncoding,
    build_graph,
    build_grid,
    enumerate_feasible_paths,
    graph_from_json,
    graph_to_json,
    random_feasible_path,
    shortest_costs_to_goal,
    validate_path,
)
from ipplan.envgraph import (
    decode_sequence,
    feasible_moves,
    remove_edges,
    shortest_costs_from,
    shortest_path,
)


def test_grid_shape():
    g = build_grid(10)
    assert g.n == 100
    assert g.start == 0 and g.goal == 99
    # 4-connected lattice: 2 directions x 2 orientations x side*(side-1)
    assert len(g.edges) == 360
    assert np.all(g.weights == 1.0)


def test_grid_prediction_points_snap_to_nodes():
    g = build_grid(10)
    ids = [
        int(np.argmin(np.linalg.norm(g.coords - p, axis=1)))
        for p in g.prediction_points
    ]
    assert ids == [0, 2, 4, 7, 9, 30, 32, 34, 37, 39,
                   60, 62, 64, 67, 69, 90, 92, 94, 97, 99]


def test_grid_euclidean_weights_scale_with_extent():
    g = build_grid(5, "euclidean", extent=2.0)
    assert np.allclose(g.weights, 0.5)  # spacing 2 / (5 - 1)
    assert np.allclose(g.coords.max(axis=0), [2.0, 2.0])


def test_grid_rejects_bad_args():
    with pytest.raises(ValueError):
        build_grid(1)
    with pytest.raises(ValueError):
        build_grid(3, "hyperbolic")


def test_path_encoding_round_trip():
    g = build_grid(3)
    seq = (0, 1, 2, 5, 8)
    p = PathEncoding.from_sequence(g, seq)
    assert p.total_cost == 4.0
    assert decode_sequence(g, p.z) == seq
    assert p.u[0] == 1 and p.u[8] == 5
    assert validate_path(g, p, budget=4.0).valid


def test_path_encoding_rejects_revisits_and_gaps():
    g = build_grid(3)
    with pytest.raises(ValueError):
        PathEncoding.from_sequence(g, [0, 1, 0, 3, 6, 7, 8])
    with pytest.raises(ValueError):
        PathEncoding.from_sequence(g, [0, 8])  # no such edge


def test_validate_path_flags_budget():
    g = build_grid(3)
    p = PathEncoding.from_sequence(g, [0, 1, 2, 5, 8])
    verdict = validate_path(g, p, budget=3.0)
    assert not verdict.valid
    assert "budget" in verdict.violations


def test_validate_path_flags_tampered_encoding():
    g = build_grid(3)
    p = PathEncoding.from_sequence(g, [0, 1, 2, 5, 8])
    z = p.z.copy()
    z[4, 4] = 1  # self-loop on a missing edge
    bad = PathEncoding(sequence=p.sequence, z=z, u=p.u, total_cost=p.total_cost)
    verdict = validate_path(g, bad, budget=10.0)
    assert not verdict.valid
    assert "integrality" in verdict.violations


def brute_force_paths(g, budget):
    """Independent recursive enumeration used as the oracle."""
    found = []

    def rec(cur, cost, seq, seen):
        if cur == g.goal:
            found.append(tuple(seq))
            return
        for j in g.out_neighbors(cur):
            w = g.weight(cur, j)
            if j in seen or cost + w > budget + 1e-9:
                continue
            seq.append(j)
            seen.add(j)
            rec(j, cost + w, seq, seen)
            seq.pop()
            seen.remove(j)

    rec(g.start, 0.0, [g.start], {g.start})
    return sorted(found)


@pytest.mark.parametrize("budget,expected", [(4.0, 6), (6.0, None)])
def test_enumeration_matches_brute_force(budget, expected):
    g = build_grid(3)
    oracle = brute_force_paths(g, budget)
    if expected is not None:
        assert len(oracle) == expected  # the six monotone corner walks
    res = enumerate_feasible_paths(g, budget)
    assert not res.truncated
    assert sorted(p.sequence for p in res.paths) == oracle


def test_enumeration_cap_truncates():
    g = build_grid(4)
    res = enumerate_feasible_paths(g, budget=14.0, cap=5)
    assert res.truncated and len(res.paths) == 5


def test_shortest_costs_on_grid():
    g = build_grid(4)
    dist = shortest_costs_to_goal(g)
    assert dist[g.start] == 6.0
    assert dist[g.goal] == 0.0
    fwd = shortest_costs_from(g, g.start)
    assert fwd[g.goal] == 6.0
    # Manhattan distance everywhere on a unit lattice
    assert fwd[5] == 2.0 and dist[5] == 4.0


def test_shortest_path_respects_blocked():
    g = build_grid(3)
    base = shortest_path(g, 0)
    assert base[0] == 0 and base[-1] == 8 and len(base) == 5
    detour = shortest_path(g, 0, blocked=frozenset(base[1:-1]))
    assert set(detour[1:-1]).isdisjoint(base[1:-1])
    with pytest.raises(InfeasibleBudgetError):
        shortest_path(g, 0, blocked=frozenset(range(1, 8)))


def test_feasible_moves_filters_goal_reachability():
    g = build_grid(3)
    # with the exact budget, only moves toward the goal survive
    moves = feasible_moves(g, current=0, visited={0}, remaining=4.0)
    assert sorted(j for j, _ in moves) == [1, 3]


def test_random_feasible_path_always_terminates():
    g = build_grid(5)
    rng = np.random.default_rng(0)
    for _ in range(25):
        p = random_feasible_path(g, budget=16.0, rng=rng)
        assert validate_path(g, p, budget=16.0).valid
    with pytest.raises(InfeasibleBudgetError):
        random_feasible_path(g, budget=7.0, rng=rng)


def test_remove_edges_carves_obstacles():
    g = build_grid(3)
    g2 = remove_edges(g, {(0, 1), (1, 0)})
    assert not g2.has_edge(0, 1) and not g2.has_edge(1, 0)
    assert shortest_costs_to_goal(g2)[0] == 4.0  # still reachable around


def test_graph_json_round_trip():
    g = build_grid(4, "euclidean", extent=3.0)
    g2 = graph_from_json(graph_to_json(g))
    assert g2.n == g.n and g2.start == g.start and g2.goal == g.goal
    assert g2.edges == g.edges
    assert np.allclose(g2.weights, g.weights)
    assert np.allclose(g2.prediction_points, g.prediction_points)


def test_graph_json_rejects_bad_ids():
    g = build_grid(3)
    payload = json.loads(graph_to_json(g))
    payload["nodes"][0]["id"] = 99
    with pytest.raises(ValueError):
        graph_from_json(json.dumps(payload))


def test_build_graph_chain():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    edges = [(0, 1), (1, 0), (1, 2), (2, 1)]
    g = build_graph(coords, edges, [1.0, 1.0, 2.0, 2.0], start=0, goal=2)
    assert shortest_costs_to_goal(g)[0] == 3.0
    assert g.prediction_points.shape == (3, 2)  # defaults to the nodes
