import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from cavroute.flowmodel import EdgeTrafficState, FdParams, RatePrediction
from cavroute.network import Edge, NetworkGraph
from cavroute.routing import (CavRequest, NoRoute, Route, WeightPolicy, dijkstra,
                              dynamic_weight, flag_edges, free_flow_weights, replan_all,
                              shortest_path)

from oracles import bellman_ford, brute_force_shortest

FD = FdParams(0.6, 0.04, 0.15)


def graph_from(n, edges, vff=10.0):
    g = NetworkGraph(range(n))
    for eid, u, v, w in edges:
        g.add_edge(Edge(eid, u, v, float(w) * vff, vff, FD))
    return g


def pred(t):
    return RatePrediction(t, 0.0, 0.0)


POLICY = WeightPolicy("constant", T_thres=2.0, gamma_w=0.5, w_base_value=1.0)


def test_weight_uncongested_is_base():
    assert dynamic_weight(POLICY, None, pred(math.inf)) == 1.0


def test_weight_hand_value():
    assert dynamic_weight(POLICY, None, pred(1.0)) == pytest.approx(1.5)


def test_weight_maximum_penalty_when_critical():
    assert dynamic_weight(POLICY, None, pred(0.0)) == pytest.approx(1.0 + 0.5 * 2.0)


def test_weight_at_threshold_is_base():
    assert dynamic_weight(POLICY, None, pred(2.0)) == 1.0


def test_flagging_strict_threshold():
    preds = {1: pred(math.inf), 2: pred(0.5), 3: pred(2.0), 4: pred(1.999)}
    assert flag_edges(preds, 2.0) == {2, 4}
    assert flag_edges({1: pred(math.inf)}, 2.0) == set()


def test_parallel_edges_take_cheaper():
    g = graph_from(2, [(1, 0, 1, 3), (2, 0, 1, 5)])
    r = shortest_path(g, {1: 3.0, 2: 5.0}, 0, 1)
    assert r.edges == (1,) and r.planned_cost == 3.0


def test_triangle():
    g = graph_from(3, [(1, 0, 1, 1), (2, 1, 2, 1), (3, 0, 2, 3)])
    r = shortest_path(g, {1: 1.0, 2: 1.0, 3: 3.0}, 0, 2)
    assert r.nodes == (0, 1, 2) and r.planned_cost == 2.0


def test_tie_break_smallest_node_sequence():
    # 0->2->3 and 0->1->3 cost the same; the smaller node sequence wins
    g = graph_from(4, [(1, 0, 2, 1), (2, 2, 3, 1), (3, 0, 1, 1), (4, 1, 3, 1)])
    r = shortest_path(g, {e: 1.0 for e in range(1, 5)}, 0, 3)
    assert r.nodes == (0, 1, 3)


def test_no_route_raises():
    g = graph_from(3, [(1, 0, 1, 1)])
    with pytest.raises(NoRoute):
        shortest_path(g, {1: 1.0}, 0, 2)


def test_invalid_weights_rejected():
    g = graph_from(2, [(1, 0, 1, 1)])
    with pytest.raises(ValueError):
        shortest_path(g, {1: -1.0}, 0, 1)
    with pytest.raises(ValueError):
        shortest_path(g, {1: math.inf}, 0, 1)


def test_route_must_be_simple():
    with pytest.raises(ValueError):
        Route((0, 1, 0), (1, 2), 2.0)


def _diamond():
    # 0 -> 1 -> 3 (cost 10+10), 0 -> 2 -> 3 (cost 12+12)
    return graph_from(4, [(1, 0, 1, 10), (2, 1, 3, 10), (3, 0, 2, 12), (4, 2, 3, 12)])


def test_replan_no_flag_keeps_free_flow_route():
    g = _diamond()
    policy = WeightPolicy("free_flow", T_thres=60.0, gamma_w=0.5)
    states = {e: EdgeTrafficState(e) for e in g.edges}
    routes = replan_all(g, states, policy, [CavRequest(7, 0, 3)])
    assert routes[7] == shortest_path(g, free_flow_weights(g, policy), 0, 3)
    assert routes[7].edges == (1, 2)


def test_replan_switches_away_from_congesting_edge():
    g = _diamond()
    policy = WeightPolicy("free_flow", T_thres=60.0, gamma_w=0.5)
    states = {e: EdgeTrafficState(e) for e in g.edges}
    # edge 1 reaches k_c in 10 s: weight 10 + 0.5*(60-10) = 35 > 24 via the bottom
    states[1].k, states[1].r = 0.03, 0.001
    routes = replan_all(g, states, policy, [CavRequest(7, 0, 3)])
    assert routes[7].edges == (3, 4)
    assert routes[7].planned_cost == pytest.approx(24.0)


def test_replan_last_edge_unchanged():
    g = _diamond()
    policy = WeightPolicy("free_flow", T_thres=60.0, gamma_w=5.0)
    states = {e: EdgeTrafficState(e, k=0.1) for e in g.edges}
    current = Route((1, 3), (2,), 10.0)
    routes = replan_all(g, states, policy, [CavRequest(7, 1, 3, current)])
    assert routes[7].edges == (2,)
    at_dest = replan_all(g, states, policy, [CavRequest(8, 3, 3, current)])
    assert at_dest[8] is current


def _random_graph(rng, n, m):
    edges = []
    for eid in range(m):
        u, v = rng.sample(range(n), 2)
        edges.append((eid, u, v, rng.randint(1, 20)))
    return edges


def test_dijkstra_matches_bellman_ford():
    rng = random.Random(11)
    for _ in range(100):
        n = rng.randint(2, 8)
        edges = _random_graph(rng, n, rng.randint(1, 20))
        g = graph_from(n, edges)
        w = {eid: float(wt) for eid, _, _, wt in edges}
        d, _ = dijkstra(g, w, 0)
        assert [d[v] for v in range(n)] == bellman_ford(n, edges, 0)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_shortest_path_is_brute_force_lexmin(data):
    n = data.draw(st.integers(2, 6))
    m = data.draw(st.integers(1, 14))
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    # small integer weights make ties common
    edges = [(eid, *rng.sample(range(n), 2), rng.randint(1, 3)) for eid in range(m)]
    g = graph_from(n, edges)
    w = {eid: float(wt) for eid, _, _, wt in edges}
    cost, nodes = brute_force_shortest(n, edges, 0, n - 1)
    if nodes is None:
        with pytest.raises(NoRoute):
            shortest_path(g, w, 0, n - 1)
        return
    r = shortest_path(g, w, 0, n - 1)
    assert r.planned_cost == cost
    assert r.nodes == nodes
