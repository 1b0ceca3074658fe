import numpy as np
import pytest

from conftest import make_random_weighted_graph
from flowtrack.scoring import ScoringModel, f_detect, f_edge
from flowtrack.solution import (
    chains_to_solution, check_feasible, empty_solution, solution_to_chains,
    solution_to_tracks,
)
from flowtrack.solver import (
    WeightedGraph, brute_force_solve, dump_flow_network, node_split, solve,
    solution_score, weigh,
)
from conftest import SMALL_CONFIG


def simple_wg(n, edges, vw, ew, s_entry):
    return WeightedGraph(
        n_vertices=n,
        edge_tails=np.array([a for a, _ in edges], dtype=np.int64),
        edge_heads=np.array([b for _, b in edges], dtype=np.int64),
        vertex_weights=np.array(vw, dtype=np.float64),
        edge_weights=np.array(ew, dtype=np.float64),
        s_entry=float(s_entry),
    )


def test_weigh_matches_direct_calls(fixture_graph, small_model):
    wg = weigh(small_model, fixture_graph)
    assert wg.n_vertices == fixture_graph.n_vertices
    assert wg.n_edges == fixture_graph.n_edges
    assert wg.s_entry == small_model.s_entry
    for i in (0, 5, len(fixture_graph.vertices) - 1):
        assert wg.vertex_weights[i] == pytest.approx(
            f_detect(small_model, fixture_graph.vertex_features[i]), abs=1e-10)
    for pos in (0, 3, fixture_graph.n_edges - 1):
        e = fixture_graph.edges[pos]
        assert wg.edge_weights[pos] == pytest.approx(
            f_edge(small_model, list(e.klt), list(e.long), fixture_graph.params), abs=1e-8)


def test_weigh_zero_model(fixture_graph):
    zero = ScoringModel.zeros(SMALL_CONFIG, s_entry=-0.5)
    wg = weigh(zero, fixture_graph)
    assert not wg.vertex_weights.any()
    assert not wg.edge_weights.any()
    assert wg.s_entry == -0.5


def test_weigh_deterministic(fixture_graph, small_model):
    a = weigh(small_model, fixture_graph)
    b = weigh(small_model, fixture_graph)
    assert np.array_equal(a.vertex_weights, b.vertex_weights)
    assert np.array_equal(a.edge_weights, b.edge_weights)


def test_node_split_counts():
    wg = simple_wg(1, [], [1.0], [], -0.5)
    fn = node_split(wg)
    assert fn.n_nodes == 4 and fn.n_arcs == 3
    wg = simple_wg(3, [(0, 1), (1, 2)], [1, 2, 3], [5, 6], -0.5)
    fn = node_split(wg)
    assert fn.n_nodes == 8 and fn.n_arcs == 11


def test_node_split_costs_are_negated_weights():
    wg = simple_wg(2, [(0, 1)], [1.5, -2.5], [0.75], -0.25)
    fn = node_split(wg)
    assert fn.arc_costs[0] == 0.25 and fn.arc_costs[1] == 0.25  # entry arcs
    assert fn.arc_costs[2] == -1.5 and fn.arc_costs[3] == 2.5   # vertex arcs
    assert fn.arc_costs[4] == 0.0 and fn.arc_costs[5] == 0.0    # exit arcs
    assert fn.arc_costs[6] == -0.75                             # edge arc
    assert fn.arc_tails[6] == fn.out_node(0) and fn.arc_heads[6] == fn.in_node(1)


def test_solve_all_negative_gives_empty():
    wg = simple_wg(3, [(0, 1), (1, 2)], [-1, -1, -1], [-1, -1], -1.0)
    x = solve(wg)
    assert x == empty_solution(3, 2)
    assert solution_score(wg, x) == 0.0


def test_solve_positive_chain():
    wg = simple_wg(3, [(0, 1), (1, 2)], [10, 10, 10], [5, 5], -1.0)
    x = solve(wg)
    assert list(x.v_hat) == [1, 1, 1]
    assert list(x.e_hat) == [1, 1]
    assert x.n_tracks == 1
    assert solution_score(wg, x) == pytest.approx(39.0)


def test_brute_force_guard():
    rng = np.random.Generator(np.random.PCG64(0))
    wg = make_random_weighted_graph(rng, max_vertices=12)
    big = simple_wg(15, [], [0.0] * 15, [], -1.0)
    with pytest.raises(ValueError):
        brute_force_solve(big)
    brute_force_solve(wg)  # within guard


def test_brute_force_empty_and_single():
    wg = simple_wg(0, [], [], [], -1.0)
    assert brute_force_solve(wg) == empty_solution(0, 0)
    wg = simple_wg(1, [], [2.0], [], -1.0)
    x = brute_force_solve(wg)
    assert list(x.v_hat) == [1] and list(x.f_hat) == [1] and list(x.l_hat) == [1]


def test_brute_force_two_vertex_hand_enumeration():
    # five feasible solutions; the connected pair wins
    wg = simple_wg(2, [(0, 1)], [1.0, 1.0], [0.5], -0.8)
    candidates = {
        "empty": 0.0,
        "v0": -0.8 + 1.0,
        "v1": -0.8 + 1.0,
        "both separate": 2 * (-0.8 + 1.0),
        "chain": -0.8 + 1.0 + 0.5 + 1.0,
    }
    x = brute_force_solve(wg)
    assert solution_score(wg, x) == pytest.approx(max(candidates.values()))
    assert list(x.e_hat) == [1]


def test_check_feasible_examples():
    wg = simple_wg(2, [(0, 1)], [1.0, 1.0], [0.5], -0.8)
    x = empty_solution(2, 1)
    assert check_feasible(wg, x)
    x.e_hat[0] = 1
    assert not check_feasible(wg, x)
    with pytest.raises(ValueError):
        check_feasible(wg, empty_solution(3, 1))


def test_solve_matches_brute_force_on_random_graphs():
    rng = np.random.Generator(np.random.PCG64(123))
    for _ in range(60):
        wg = make_random_weighted_graph(rng)
        xs = solve(wg)
        xb = brute_force_solve(wg)
        assert check_feasible(wg, xs)
        assert solution_score(wg, xs) == pytest.approx(solution_score(wg, xb), abs=1e-9)


def test_potentials_method_identical_to_label_correcting():
    rng = np.random.Generator(np.random.PCG64(321))
    for _ in range(80):
        wg = make_random_weighted_graph(rng, edge_prob=0.35)
        assert solve(wg, method="label") == solve(wg, method="potentials")
    with pytest.raises(ValueError):
        solve(make_random_weighted_graph(rng), method="bogus")


def test_potentials_method_on_fixture_graph(fixture_graph, small_model):
    wg = weigh(small_model, fixture_graph)
    assert solve(wg, method="label") == solve(wg, method="potentials")


def test_solver_iterations_bounded_and_monotone():
    rng = np.random.Generator(np.random.PCG64(77))
    wg = make_random_weighted_graph(rng, max_vertices=12, edge_prob=0.4)
    x = solve(wg)
    assert x.n_tracks <= wg.n_vertices


def test_decode_round_trip(fixture_graph, small_model):
    wg = weigh(small_model, fixture_graph)
    x = solve(wg)
    chains = solution_to_chains(fixture_graph, x)
    seen = [v for chain in chains for v in chain]
    assert sorted(seen) == sorted(int(i) for i in np.flatnonzero(x.v_hat))
    assert len(set(seen)) == len(seen)
    rebuilt = chains_to_solution(fixture_graph, chains)
    assert rebuilt == x


def test_solution_to_tracks_frame_order(fixture_graph, small_model):
    wg = weigh(small_model, fixture_graph)
    x = solve(wg)
    tracks = solution_to_tracks(fixture_graph, x)
    for t in tracks:
        frames = [e.frame for e in t.entries]
        assert frames == sorted(frames)
    assert solution_to_tracks(fixture_graph,
                              empty_solution(fixture_graph.n_vertices,
                                             fixture_graph.n_edges)) == []


def test_flow_network_dump(tmp_path):
    wg = simple_wg(2, [(0, 1)], [1.0, 1.0], [0.5], -0.8)
    path = tmp_path / "flow.jsonl"
    dump_flow_network(node_split(wg), path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 7
