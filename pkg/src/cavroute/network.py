"""Road network graph, control-zone geometry and scenario files.

A scenario file is JSON with top-level keys ``nodes``, ``edges``, ``zones``,
``demand``, ``routing``, ``coordination`` and optionally ``simulation`` and
``name``. See README for the full schema.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .coordination.limits import (CoordinationConfig, SafetyParams, SolverConfig,
                                  UncertaintyBounds, VehicleLimits)
from .flowmodel import FdParams
from .routing import RdConfig, WeightPolicy

NodeId = int
EdgeId = int


class ScenarioError(Exception):
    pass


class ScenarioParseError(ScenarioError):
    """The file is missing or is not a well-formed scenario document."""


class ScenarioValidationError(ScenarioError):
    """The document parsed but violates one or more scenario invariants."""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Edge:
    id: EdgeId
    source: NodeId
    target: NodeId
    length: float  # m
    free_flow_speed: float  # m/s
    fd: FdParams

    @property
    def free_flow_time(self) -> float:
        return self.length / self.free_flow_speed

    @property
    def capacity(self) -> int:
        """Vehicles the edge holds at jam density (at least one)."""
        return max(1, int(math.floor(self.fd.k_j * self.length + 1e-9)))


class NetworkGraph:
    """Directed graph with deterministic (sorted by id) adjacency."""

    def __init__(self, nodes: Iterable[NodeId] = (), edges: Iterable[Edge] = ()):
        self.nodes: List[NodeId] = []
        self.edges: Dict[EdgeId, Edge] = {}
        self._out: Dict[NodeId, List[Tuple[EdgeId, NodeId]]] = {}
        self._in: Dict[NodeId, List[Tuple[EdgeId, NodeId]]] = {}
        for n in nodes:
            self.add_node(n)
        for e in edges:
            self.add_edge(e)

    def add_node(self, node: NodeId) -> None:
        if node in self._out:
            raise ValueError(f"duplicate node {node}")
        self.nodes.append(node)
        self.nodes.sort()
        self._out[node] = []
        self._in[node] = []

    def add_edge(self, edge: Edge) -> None:
        if edge.id in self.edges:
            raise ValueError(f"duplicate edge {edge.id}")
        for n in (edge.source, edge.target):
            if n not in self._out:
                raise ValueError(f"edge {edge.id} references unknown node {n}")
        self.edges[edge.id] = edge
        self._out[edge.source].append((edge.id, edge.target))
        self._out[edge.source].sort()
        self._in[edge.target].append((edge.id, edge.source))
        self._in[edge.target].sort()

    def has_node(self, node: NodeId) -> bool:
        return node in self._out

    def neighbors(self, node: NodeId) -> List[Tuple[EdgeId, NodeId]]:
        """Outgoing ``(edge id, head node)`` pairs sorted by edge id."""
        try:
            return list(self._out[node])
        except KeyError:
            raise KeyError(f"unknown node {node}") from None

    def incoming(self, node: NodeId) -> List[Tuple[EdgeId, NodeId]]:
        try:
            return list(self._in[node])
        except KeyError:
            raise KeyError(f"unknown node {node}") from None

    def reachable(self, origin: NodeId, destination: NodeId) -> bool:
        seen = {origin}
        queue = deque([origin])
        while queue:
            u = queue.popleft()
            if u == destination:
                return True
            for _, v in self._out[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return False

    def __eq__(self, other):
        return isinstance(other, NetworkGraph) and self.nodes == other.nodes \
            and self.edges == other.edges

    def __repr__(self):
        return f"NetworkGraph(|V|={len(self.nodes)}, |E|={len(self.edges)})"


def neighbors(graph: NetworkGraph, node: NodeId) -> List[Tuple[EdgeId, NodeId]]:
    return graph.neighbors(node)


@dataclass(frozen=True)
class ConflictPoint:
    approach_a: EdgeId
    approach_b: EdgeId
    dist_a: float  # m from zone entry along approach a
    dist_b: float


@dataclass(frozen=True)
class ControlZoneSpec:
    """Control zone around an intersection.

    The zone covers the last ``zone_length`` meters of every approach edge
    plus the crossing; every path through it has length ``zone_length``.
    """

    node: NodeId
    zone_length: float
    conflict_points: Tuple[ConflictPoint, ...] = ()

    def conflict(self, a: EdgeId, b: EdgeId) -> Optional[Tuple[float, float]]:
        for c in self.conflict_points:
            if (c.approach_a, c.approach_b) == (a, b):
                return c.dist_a, c.dist_b
            if (c.approach_a, c.approach_b) == (b, a):
                return c.dist_b, c.dist_a
        return None


@dataclass(frozen=True)
class DemandEntry:
    origin: NodeId
    destination: NodeId
    entry_time: float
    limits: Optional[VehicleLimits] = None  # None: scenario default


@dataclass(frozen=True)
class RoutingConfig:
    policy: WeightPolicy = field(default_factory=WeightPolicy)
    rd: RdConfig = field(default_factory=RdConfig)
    rate_window: float = 10.0


@dataclass(frozen=True)
class Scenario:
    name: str
    graph: NetworkGraph
    zones: Dict[NodeId, ControlZoneSpec]
    demand: Tuple[DemandEntry, ...]
    routing: RoutingConfig
    coordination: CoordinationConfig
    simulation: Any = None  # simengine.SimConfig


# ---------------------------------------------------------------- parsing

def _num(d: dict, key: str, where: str, default=None) -> float:
    if key not in d:
        if default is not None:
            return default
        raise ScenarioParseError(f"{where}: missing key '{key}'")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioParseError(f"{where}: '{key}' must be a number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, where: str) -> int:
    if key not in d:
        raise ScenarioParseError(f"{where}: missing key '{key}'")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioParseError(f"{where}: '{key}' must be an integer id, got {v!r}")
    return v


def _limits(d: dict, where: str) -> VehicleLimits:
    try:
        return VehicleLimits(_num(d, "u_min", where), _num(d, "u_max", where),
                             _num(d, "v_min", where), _num(d, "v_max", where))
    except ValueError as exc:
        raise ScenarioValidationError([f"{where}: {exc}"]) from None


def expand_demand(items: List[dict]) -> List[dict]:
    """Expand ``rate_vps`` flow items into single-vehicle entries.

    A flow ``{origin, destination, start_s, end_s, rate_vps}`` releases one
    vehicle every ``1/rate`` seconds from ``start_s`` while before ``end_s``.
    """
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise ScenarioParseError(f"demand[{i}]: expected an object")
        if "rate_vps" not in item:
            out.append(item)
            continue
        where = f"demand[{i}]"
        rate = _num(item, "rate_vps", where)
        start = _num(item, "start_s", where, 0.0)
        end = _num(item, "end_s", where)
        if rate <= 0:
            raise ScenarioValidationError([f"{where}: rate_vps must be positive"])
        n = int(math.ceil((end - start) * rate - 1e-9))
        for m in range(max(n, 0)):
            entry = {k: v for k, v in item.items() if k not in ("rate_vps", "start_s", "end_s")}
            entry["entry_time_s"] = start + m / rate
            out.append(entry)
    return out


def parse_scenario(doc: dict) -> Scenario:
    """Build and validate a Scenario from a decoded JSON document."""
    from .simengine import SimConfig

    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario must be a JSON object")
    for key in ("nodes", "edges", "demand"):
        if key not in doc:
            raise ScenarioParseError(f"missing top-level key '{key}'")
    problems: List[str] = []

    node_ids = []
    for i, n in enumerate(doc["nodes"]):
        nid = n if isinstance(n, int) and not isinstance(n, bool) else \
            _int(n, "id", f"nodes[{i}]") if isinstance(n, dict) else None
        if nid is None:
            raise ScenarioParseError(f"nodes[{i}]: expected an id or an object with 'id'")
        node_ids.append(nid)
    graph = NetworkGraph()
    for nid in node_ids:
        if graph.has_node(nid):
            problems.append(f"duplicate node {nid}")
        else:
            graph.add_node(nid)

    for i, e in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        if not isinstance(e, dict):
            raise ScenarioParseError(f"{where}: expected an object")
        eid = _int(e, "id", where)
        where = f"edge {eid}"
        src, dst = _int(e, "from", where), _int(e, "to", where)
        length = _num(e, "length_m", where)
        vff = _num(e, "vff_mps", where)
        fd_doc = e.get("fd")
        if not isinstance(fd_doc, dict):
            raise ScenarioParseError(f"{where}: missing 'fd' object")
        qc, kc, kj = (_num(fd_doc, k, where) for k in ("qc_vps", "kc_vpm", "kj_vpm"))
        bad = False
        for n in (src, dst):
            if not graph.has_node(n):
                problems.append(f"{where} references unknown node {n}")
                bad = True
        if length <= 0:
            problems.append(f"{where}: length must be positive")
            bad = True
        if vff <= 0:
            problems.append(f"{where}: free-flow speed must be positive")
            bad = True
        try:
            fd = FdParams(qc, kc, kj)
        except ValueError as exc:
            problems.append(f"{where}: {exc}")
            bad = True
        if src == dst:
            problems.append(f"{where}: self loop at node {src}")
            bad = True
        if eid in graph.edges:
            problems.append(f"duplicate edge {eid}")
            bad = True
        if not bad:
            graph.add_edge(Edge(eid, src, dst, length, vff, fd))

    zones: Dict[NodeId, ControlZoneSpec] = {}
    for i, z in enumerate(doc.get("zones", [])):
        where = f"zones[{i}]"
        node = _int(z, "node", where)
        where = f"zone at node {node}"
        L = _num(z, "zone_length_m", where)
        if not graph.has_node(node):
            problems.append(f"{where}: unknown node")
            continue
        if node in zones:
            problems.append(f"{where}: duplicate zone")
            continue
        if L <= 0:
            problems.append(f"{where}: zone length must be positive")
            continue
        approaches = {eid for eid, _ in graph.incoming(node)}
        for eid in sorted(approaches):
            if graph.edges[eid].length <= L:
                problems.append(f"{where}: approach edge {eid} is not longer than the zone")
        cps = []
        seen = set()
        for j, c in enumerate(z.get("conflicts", [])):
            cw = f"{where} conflict {j}"
            pair = c.get("approaches")
            dists = c.get("distances_m")
            if not (isinstance(pair, list) and len(pair) == 2 and isinstance(dists, list)
                    and len(dists) == 2):
                raise ScenarioParseError(f"{cw}: need 'approaches' and 'distances_m' pairs")
            a, b = pair
            if a == b or a not in approaches or b not in approaches:
                problems.append(f"{cw}: approaches {pair} are not two distinct incoming edges")
                continue
            if frozenset(pair) in seen:
                problems.append(f"{cw}: duplicate approach pair {pair}")
                continue
            seen.add(frozenset(pair))
            da, db = float(dists[0]), float(dists[1])
            if not (0 < da < L and 0 < db < L):
                problems.append(f"{cw}: distances {dists} outside (0, {L})")
                continue
            cps.append(ConflictPoint(a, b, da, db))
        zones[node] = ControlZoneSpec(node, L, tuple(cps))

    coord_doc = doc.get("coordination", {})
    if "limits" not in coord_doc:
        raise ScenarioParseError("coordination: missing 'limits'")
    default_limits = _limits(coord_doc["limits"], "coordination.limits")
    safety_doc = coord_doc.get("safety", {})
    unc_doc = coord_doc.get("uncertainty", {})
    try:
        coordination = CoordinationConfig(
            limits=default_limits,
            safety=SafetyParams(
                gamma_s=_num(safety_doc, "gamma_s_m", "coordination.safety", 2.0),
                phi=_num(safety_doc, "phi_s", "coordination.safety", 0.8),
                t_h=_num(coord_doc, "t_h_s", "coordination", 1.5)),
            uncertainty=UncertaintyBounds(
                e_max=_num(unc_doc, "e_max_s", "coordination.uncertainty", 0.0),
                f_max=_num(unc_doc, "f_max_m", "coordination.uncertainty", 0.0),
                g_max=_num(unc_doc, "g_max_mps", "coordination.uncertainty", 0.0)),
            solver=SolverConfig(
                w_time=_num(coord_doc, "w_time", "coordination", 0.5),
                dt=_num(coord_doc, "dt_s", "coordination", 0.1),
                sample_step=_num(coord_doc, "sample_step_s", "coordination", 0.1)),
        )
    except ValueError as exc:
        problems.append(f"coordination: {exc}")
        coordination = None

    r_doc = doc.get("routing", {})
    mode = r_doc.get("w_base", "free_flow")
    try:
        routing = RoutingConfig(
            policy=WeightPolicy(
                w_base_mode=mode,
                T_thres=_num(r_doc, "T_thres_s", "routing", 2.0),
                gamma_w=_num(r_doc, "gamma_w", "routing", 0.5),
                w_base_value=_num(r_doc, "w_base_value", "routing", 1.0)),
            rd=RdConfig(
                replan_period=_num(r_doc, "replan_period_s", "routing", 10.0),
                tc_change_threshold=_num(r_doc, "tc_change_threshold_s", "routing", 5.0),
                enabled=bool(r_doc.get("replan", True))),
            rate_window=_num(r_doc, "rate_window_s", "routing", 10.0),
        )
        if routing.rate_window <= 0:
            raise ValueError("rate_window_s must be positive")
    except ValueError as exc:
        problems.append(f"routing: {exc}")
        routing = None

    demand = []
    for i, d in enumerate(expand_demand(list(doc["demand"]))):
        where = f"demand[{i}]"
        o, dst = _int(d, "origin", where), _int(d, "destination", where)
        t = _num(d, "entry_time_s", where)
        lim = _limits(d["limits"], f"{where}.limits") if "limits" in d else None
        if not graph.has_node(o) or not graph.has_node(dst):
            problems.append(f"{where}: OD pair ({o}, {dst}) references unknown node")
            continue
        if o == dst:
            problems.append(f"{where}: origin equals destination {o}")
            continue
        if t < 0:
            problems.append(f"{where}: negative entry time")
            continue
        demand.append(DemandEntry(o, dst, t, lim))
    unreachable = sorted({(d.origin, d.destination) for d in demand
                          if not graph.reachable(d.origin, d.destination)})
    for o, dst in unreachable:
        problems.append(f"OD pair ({o}, {dst}) is unreachable")

    try:
        simulation = SimConfig.from_dict(doc.get("simulation", {}))
    except ValueError as exc:
        problems.append(f"simulation: {exc}")
        simulation = None

    if problems:
        raise ScenarioValidationError(problems)
    return Scenario(name=str(doc.get("name", "scenario")), graph=graph, zones=zones,
                    demand=tuple(demand), routing=routing, coordination=coordination,
                    simulation=simulation)


def read_scenario_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: malformed JSON ({exc})") from None


def load_scenario(path) -> Scenario:
    """Read, parse and validate a scenario file."""
    return parse_scenario(read_scenario_document(path))


def apply_overrides(doc: dict, overrides: Dict[str, Any]) -> dict:
    """Return a copy of ``doc`` with dotted-key overrides applied.

    Only existing sections may be targeted; the final key may be new so that
    defaults can be overridden.
    """
    doc = copy.deepcopy(doc)
    for key, value in overrides.items():
        parts = key.split(".")
        node = doc
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                if p in ("routing", "coordination", "simulation") and node is doc:
                    node[p] = {}
                else:
                    raise KeyError(f"override '{key}': no section '{p}'")
            node = node[p]
        node[parts[-1]] = value
    return doc


def _limits_doc(lim: VehicleLimits) -> dict:
    return {"u_min": lim.u_min, "u_max": lim.u_max, "v_min": lim.v_min, "v_max": lim.v_max}


def scenario_to_dict(s: Scenario) -> dict:
    """Serialize back to the file schema; demand is written per vehicle."""
    c = s.coordination
    doc = {
        "name": s.name,
        "nodes": list(s.graph.nodes),
        "edges": [{"id": e.id, "from": e.source, "to": e.target, "length_m": e.length,
                   "vff_mps": e.free_flow_speed,
                   "fd": {"qc_vps": e.fd.q_c, "kc_vpm": e.fd.k_c, "kj_vpm": e.fd.k_j}}
                  for e in sorted(s.graph.edges.values(), key=lambda e: e.id)],
        "zones": [{"node": z.node, "zone_length_m": z.zone_length,
                   "conflicts": [{"approaches": [cp.approach_a, cp.approach_b],
                                  "distances_m": [cp.dist_a, cp.dist_b]}
                                 for cp in z.conflict_points]}
                  for _, z in sorted(s.zones.items())],
        "demand": [dict({"origin": d.origin, "destination": d.destination,
                         "entry_time_s": d.entry_time},
                        **({"limits": _limits_doc(d.limits)} if d.limits else {}))
                   for d in s.demand],
        "routing": {"w_base": s.routing.policy.w_base_mode,
                    "w_base_value": s.routing.policy.w_base_value,
                    "T_thres_s": s.routing.policy.T_thres,
                    "gamma_w": s.routing.policy.gamma_w,
                    "replan_period_s": s.routing.rd.replan_period,
                    "tc_change_threshold_s": s.routing.rd.tc_change_threshold,
                    "replan": s.routing.rd.enabled,
                    "rate_window_s": s.routing.rate_window},
        "coordination": {"limits": _limits_doc(c.limits),
                         "t_h_s": c.safety.t_h,
                         "safety": {"gamma_s_m": c.safety.gamma_s, "phi_s": c.safety.phi},
                         "uncertainty": {"e_max_s": c.uncertainty.e_max,
                                         "f_max_m": c.uncertainty.f_max,
                                         "g_max_mps": c.uncertainty.g_max},
                         "w_time": c.solver.w_time, "dt_s": c.solver.dt,
                         "sample_step_s": c.solver.sample_step},
    }
    if s.simulation is not None:
        doc["simulation"] = s.simulation.to_dict()
    return doc


def scenario_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
