"""
Dynamic edge weights and re-routing
===================================

Two routes from node 1 to node 4. While every edge is far from critical
density vehicles take the shorter one; once its first edge is predicted to
turn critical soon, its weight grows and new routes avoid it.
"""

from cavroute.flowmodel import EdgeTrafficState, FdParams
from cavroute.network import Edge, NetworkGraph
from cavroute.routing import (CavRequest, WeightPolicy, edge_weights, flag_edges,
                              free_flow_weights, predict_all, replan_all, shortest_path)

fd = FdParams(0.6, 0.04, 0.15)
g = NetworkGraph([1, 2, 3, 4])
for eid, u, v, length in [(1, 1, 2, 400.0), (2, 2, 4, 400.0), (3, 1, 3, 500.0), (4, 3, 4, 500.0)]:
    g.add_edge(Edge(eid, u, v, length, 15.0, fd))

policy = WeightPolicy("free_flow", T_thres=60.0, gamma_w=0.5)
w0 = free_flow_weights(g, policy)
print("free-flow route:", shortest_path(g, w0, 1, 4).nodes)

# %%
# Edge 1 fills at 1 veh/km per second; the others stay empty.
states = {e: EdgeTrafficState(e) for e in g.edges}
for t in range(0, 31):
    for e, s in states.items():
        s.record(float(t), 0.001 * t if e == 1 else 0.0, window=10.0)

preds = predict_all(g, states)
print("time to critical:", {e: round(p.t_c_remaining, 1) for e, p in preds.items()})
print("flagged edges:", sorted(flag_edges(preds, policy.T_thres)))
w = edge_weights(g, preds, policy)
print("weights:", {e: round(x, 1) for e, x in w.items()})

routes = replan_all(g, states, policy, [CavRequest(7, 1, 4)])
print("re-planned route for cav 7:", routes[7].nodes, f"cost {routes[7].planned_cost:.1f}")
