"""Routing decision unit: predictive edge weights and shortest paths."""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .flowmodel import EdgeTrafficState, RatePrediction, predict_time_to_critical

log = logging.getLogger(__name__)


class NoRoute(LookupError):
    pass


@dataclass(frozen=True)
class WeightPolicy:
    w_base_mode: str = "free_flow"  # or "constant"
    T_thres: float = 2.0  # s
    gamma_w: float = 0.5  # weight added per second below the threshold
    w_base_value: float = 1.0  # used in "constant" mode

    def __post_init__(self):
        if self.w_base_mode not in ("free_flow", "constant"):
            raise ValueError(f"unknown w_base mode {self.w_base_mode!r}")
        if not self.T_thres > 0:
            raise ValueError("T_thres must be positive")
        if self.gamma_w < 0:
            raise ValueError("gamma_w must be nonnegative")

    def base(self, edge) -> float:
        if self.w_base_mode == "constant":
            return self.w_base_value
        return edge.free_flow_time


@dataclass(frozen=True)
class RdConfig:
    replan_period: float = 10.0  # s
    tc_change_threshold: float = 5.0  # s
    enabled: bool = True

    def __post_init__(self):
        if not self.replan_period > 0:
            raise ValueError("replan_period must be positive")


@dataclass(frozen=True)
class Route:
    nodes: Tuple[int, ...]
    edges: Tuple[int, ...]
    planned_cost: float

    def __post_init__(self):
        if len(self.nodes) != len(self.edges) + 1:
            raise ValueError("a route needs one more node than edges")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"route {self.nodes} repeats a node")


def dynamic_weight(policy: WeightPolicy, edge, prediction: RatePrediction) -> float:
    """Base weight while the edge is further than ``T_thres`` from critical
    density, growing linearly by ``gamma_w`` per second of shortfall below it."""
    w = policy.base(edge)
    t = prediction.t_c_remaining
    if t > policy.T_thres:
        return w
    return w + policy.gamma_w * (policy.T_thres - t)


def flag_edges(predictions: Mapping[int, RatePrediction], T_thres: float) -> Set[int]:
    return {e for e, p in predictions.items() if p.t_c_remaining < T_thres}


def predict_all(graph, states: Mapping[int, EdgeTrafficState]) -> Dict[int, RatePrediction]:
    return {eid: predict_time_to_critical(states[eid], graph.edges[eid].fd)
            for eid in sorted(graph.edges)}


def edge_weights(graph, predictions: Mapping[int, RatePrediction],
                 policy: WeightPolicy) -> Dict[int, float]:
    return {eid: dynamic_weight(policy, graph.edges[eid], predictions[eid])
            for eid in sorted(graph.edges)}


def free_flow_weights(graph, policy: WeightPolicy) -> Dict[int, float]:
    return {eid: policy.base(e) for eid, e in sorted(graph.edges.items())}


def dijkstra(graph, weights: Mapping[int, float], source: int,
             reverse: bool = False) -> Tuple[Dict[int, float], Dict[int, Optional[int]]]:
    """Minimum travel time from ``source`` to every node, and predecessors.

    With ``reverse=True`` edges are followed backwards, giving the minimum
    time from every node *to* ``source``. Heap ties resolve on node id.
    """
    time = {v: math.inf for v in graph.nodes}
    prev: Dict[int, Optional[int]] = {v: None for v in graph.nodes}
    time[source] = 0.0
    heap = [(0.0, source)]
    done = set()
    adj = graph.incoming if reverse else graph.neighbors
    while heap:
        t_u, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for eid, v in adj(u):
            w = weights[eid]
            new = t_u + w
            if new < time[v]:
                time[v] = new
                prev[v] = u
                heapq.heappush(heap, (new, v))
    return time, prev


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def route_from_distances(graph, weights: Mapping[int, float], to_dest: Mapping[int, float],
                         origin: int, destination: int) -> Route:
    """Walk the shortest-path DAG from ``origin``, always taking the smallest
    next node id (then smallest edge id), which yields the lexicographically
    smallest node sequence among all minimum-cost paths."""
    if not math.isfinite(to_dest[origin]):
        raise NoRoute(f"no route from {origin} to {destination}")
    nodes, edges = [origin], []
    seen = {origin}
    u = origin
    while u != destination:
        best = None
        for eid, v in graph.neighbors(u):
            if v in seen or not math.isfinite(to_dest[v]):
                continue
            if _close(weights[eid] + to_dest[v], to_dest[u]):
                if best is None or (v, eid) < best:
                    best = (v, eid)
        if best is None:
            raise NoRoute(f"shortest-path walk stuck at node {u}")
        v, eid = best
        nodes.append(v)
        edges.append(eid)
        seen.add(v)
        u = v
    cost = 0.0
    for eid in edges:
        cost += weights[eid]
    return Route(tuple(nodes), tuple(edges), cost)


def shortest_path(graph, weights: Mapping[int, float], origin: int, destination: int) -> Route:
    """Minimum-weight path, ties broken by the smallest node-id sequence."""
    if origin == destination:
        raise ValueError("origin equals destination")
    for eid, w in weights.items():
        if not (w >= 0 and math.isfinite(w)):
            raise ValueError(f"edge {eid}: weight {w} is not finite and nonnegative")
    to_dest, _ = dijkstra(graph, weights, destination, reverse=True)
    return route_from_distances(graph, weights, to_dest, origin, destination)


@dataclass(frozen=True)
class CavRequest:
    cav_id: int
    node: int  # first node at which the route may still change
    destination: int
    route: Optional[Route] = None  # current remaining route from ``node``


def replan_all(graph, states: Mapping[int, EdgeTrafficState], policy: WeightPolicy,
               cavs: Iterable[CavRequest],
               predictions: Optional[Mapping[int, RatePrediction]] = None) -> Dict[int, Route]:
    """Re-route every active vehicle on weights built from the latest densities.

    Steps: predict time to critical density per edge, turn predictions into
    dynamic weights, then run one shortest-path query per vehicle from the
    node where its route can still change. Vehicles already at their
    destination node keep their current route; a vehicle with no route under
    the new weights keeps its previous one.
    """
    if predictions is None:
        predictions = predict_all(graph, states)
    weights = edge_weights(graph, predictions, policy)
    to_dest_cache: Dict[int, Dict[int, float]] = {}
    out: Dict[int, Route] = {}
    for cav in sorted(cavs, key=lambda c: c.cav_id):
        if cav.node == cav.destination:
            if cav.route is not None:
                out[cav.cav_id] = cav.route
            continue
        if cav.destination not in to_dest_cache:
            to_dest_cache[cav.destination] = dijkstra(graph, weights, cav.destination,
                                                      reverse=True)[0]
        try:
            out[cav.cav_id] = route_from_distances(graph, weights, to_dest_cache[cav.destination],
                                                   cav.node, cav.destination)
        except NoRoute as exc:
            log.info("cav %s keeps its route: %s", cav.cav_id, exc)
            if cav.route is not None:
                out[cav.cav_id] = cav.route
    return out
