"""Time-stepped network simulation coupling link flow, routing and intersections.

Links are mesoscopic with a spatial queue: vehicles waiting at the stop line
occupy ``1/k_j`` meters each, and moving vehicles travel at the
fundamental-diagram speed of their density over the remaining length (never
below a small creep speed, so a full link still discharges). The last
``zone_length`` meters before a coordinated intersection form its control
zone, where vehicles follow their committed trajectory exactly. Vehicles that
cannot be admitted wait at the zone boundary in arrival order and still
count toward the edge density.
"""

from __future__ import annotations

import csv
import heapq
import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Deque, Dict, List, Optional, Tuple

import numpy as np

from .coordination import (Coordinator, Plan, SafetyViolation, VehicleLimits,
                           audit_trajectory)
from .coordination.coordinator import AUDIT_TOL
from .flowmodel import EdgeTrafficState, fd_flow
from .network import Scenario
from .routing import (CavRequest, Route, edge_weights, flag_edges, free_flow_weights,
                      predict_all, replan_all, shortest_path)

log = logging.getLogger(__name__)

CONTROLLERS = ("baseline", "proposed")


@dataclass(frozen=True)
class SimConfig:
    step: float = 0.1  # s
    horizon: float = 3600.0  # s
    sensor_period: float = 1.0  # s
    seed: int = 0
    noise_eps: float = 0.0  # veh/m, half-width of uniform sensor noise
    audit: bool = True
    creep_speed: float = 1.0  # m/s, floor on link speed

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.sensor_period < self.step:
            raise ValueError("sensor_period must be at least one step")
        ratio = self.sensor_period / self.step
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("sensor_period must be a multiple of step")
        if self.horizon <= 0 or self.noise_eps < 0:
            raise ValueError("horizon must be positive and noise_eps nonnegative")
        if not self.creep_speed > 0:
            raise ValueError("creep_speed must be positive")

    _KEYS = {"step": "step_s", "horizon": "horizon_s", "sensor_period": "sensor_period_s",
             "seed": "seed", "noise_eps": "noise_eps_vpm", "audit": "audit",
             "creep_speed": "creep_speed_mps"}

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        unknown = set(d) - set(cls._KEYS.values())
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)}")
        kw = {f: d[k] for f, k in cls._KEYS.items() if k in d}
        if "seed" in kw:
            kw["seed"] = int(kw["seed"])
        if "audit" in kw:
            kw["audit"] = bool(kw["audit"])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {k: getattr(self, f) for f, k in self._KEYS.items()}


@dataclass
class VehicleRecord:
    id: int
    origin: int
    destination: int
    entry_time: float
    free_flow_time: float
    exit_time: Optional[float] = None
    spawn_time: Optional[float] = None
    routes: List[Tuple[float, Tuple[int, ...]]] = field(default_factory=list)
    energy: float = 0.0
    distance: float = 0.0

    @property
    def completed(self) -> bool:
        return self.exit_time is not None

    @property
    def travel_time(self) -> float:
        return self.exit_time - self.entry_time

    @property
    def delay(self) -> float:
        return self.travel_time - self.free_flow_time


@dataclass
class MetricsReport:
    ttt: float
    total_delay: float
    completed: int
    active: int
    not_entered: int
    energy: float
    time_above_critical: float  # edge-seconds with sensed density above k_c
    per_edge: Dict[int, dict]
    series: List[Tuple[float, int, float, float]]  # (t, edge, k, q)
    vehicles: List[VehicleRecord]

    def summary(self) -> dict:
        return {
            "ttt_s": self.ttt,
            "total_delay_s": self.total_delay,
            "completed": self.completed,
            "incomplete": self.active + self.not_entered,
            "active": self.active,
            "not_entered": self.not_entered,
            "energy_proxy": self.energy,
            "edge_time_above_critical_s": self.time_above_critical,
            "per_edge": {str(e): v for e, v in sorted(self.per_edge.items())},
        }


@dataclass
class _Vehicle:
    rec: VehicleRecord
    limits: VehicleLimits
    state: str = "pending"  # pending, link, queued, zone, done
    path: List[int] = field(default_factory=list)  # remaining edges, current first
    pos: float = 0.0
    plan: Optional[Plan] = None
    queue_since: float = 0.0
    link_speed: float = 0.0
    none_logged: bool = False

    @property
    def id(self) -> int:
        return self.rec.id

    @property
    def edge(self) -> int:
        return self.path[0]

    @property
    def next_edge(self) -> Optional[int]:
        return self.path[1] if len(self.path) > 1 else None


class World:
    """Mutable simulation state; advance with ``step``."""

    def __init__(self, scenario: Scenario, controller: str = "proposed",
                 config: Optional[SimConfig] = None, dump_trajectories: bool = False):
        if controller not in CONTROLLERS:
            raise ValueError(f"controller must be one of {CONTROLLERS}")
        self.scenario = scenario
        self.graph = scenario.graph
        self.controller = controller
        self.config = config or scenario.simulation or SimConfig()
        self.rng = np.random.default_rng(self.config.seed)
        self.k = 0
        self.policy = scenario.routing.policy
        self.rd = scenario.routing.rd
        self.coordinators = {n: Coordinator(z, scenario.coordination)
                             for n, z in sorted(scenario.zones.items())}
        self.edge_states = {e: EdgeTrafficState(e, maxlen=self._history_len())
                            for e in sorted(self.graph.edges)}
        self.on_edge: Dict[int, set] = {e: set() for e in self.graph.edges}
        self.reserved: Dict[int, int] = {e: 0 for e in self.graph.edges}
        self.queues: Dict[int, Deque[int]] = {e: deque() for e in self.graph.edges}
        self.spawn_queues: Dict[int, Deque[int]] = {n: deque() for n in self.graph.nodes}
        self.free_weights = free_flow_weights(self.graph, self.policy)
        self.weights = dict(self.free_weights)
        self._ff_time_weights = {e: edge.free_flow_time for e, edge in self.graph.edges.items()}
        self._ff_cache: Dict[Tuple[int, int], float] = {}
        self.last_replan = -math.inf
        self.last_tc: Optional[Dict[int, float]] = None
        self.series: List[Tuple[float, int, float, float]] = []
        self.events: List[Tuple[float, str, str, str]] = []
        self.replans: List[Tuple[float, str, int]] = []
        self.trajectories: List[Tuple[int, int, str, Plan]] = [] if dump_trajectories else None
        self._check_geometry()

        self.vehicles: Dict[int, _Vehicle] = {}
        order = sorted(range(len(scenario.demand)), key=lambda i: (scenario.demand[i].entry_time, i))
        default = scenario.coordination.limits
        for vid, i in enumerate(order):
            d = scenario.demand[i]
            rec = VehicleRecord(vid, d.origin, d.destination, d.entry_time,
                                self._free_flow_time(d.origin, d.destination))
            self.vehicles[vid] = _Vehicle(rec, d.limits or default)
        self.pending: Deque[int] = deque(range(len(order)))

    # ------------------------------------------------------------ helpers

    @property
    def t(self) -> float:
        return self.k * self.config.step

    def _history_len(self) -> int:
        return int(math.ceil(self.scenario.routing.rate_window / self.config.sensor_period)) + 4

    def _check_geometry(self) -> None:
        for e in self.graph.edges.values():
            zone = self.scenario.zones.get(e.target)
            link = e.length - (zone.zone_length if zone else 0.0)
            if link <= e.free_flow_speed * self.config.step:
                raise ValueError(f"edge {e.id}: link part {link} m is shorter than one step "
                                 f"of free-flow travel")

    def _free_flow_time(self, o: int, d: int) -> float:
        if (o, d) not in self._ff_cache:
            self._ff_cache[(o, d)] = shortest_path(self.graph, self._ff_time_weights, o, d).planned_cost
        return self._ff_cache[(o, d)]

    def count(self, e: int) -> int:
        return len(self.on_edge[e])

    def has_room(self, e: int) -> bool:
        return self.count(e) + self.reserved[e] < self.graph.edges[e].capacity

    def density(self, e: int) -> float:
        edge = self.graph.edges[e]
        return min(self.count(e) / edge.length, edge.fd.k_j)

    def link_speed(self, e: int, moving: Optional[int] = None) -> float:
        """Speed of moving vehicles on the link part of edge ``e``.

        ``moving`` is the number of vehicles on the link part that are not
        queued; it is counted when not given.
        """
        edge = self.graph.edges[e]
        if moving is None:
            moving = sum(1 for vid in self.on_edge[e] if self.vehicles[vid].state == "link")
        room = self.boundary(e) - len(self.queues[e]) / edge.fd.k_j
        k = min(moving / max(room, 1.0 / edge.fd.k_j), edge.fd.k_j)
        if k <= edge.fd.k_c:
            v = edge.fd.free_flow_speed
        else:
            v = fd_flow(edge.fd, k) / k
        return min(edge.free_flow_speed, max(v, self.config.creep_speed))

    def boundary(self, e: int) -> float:
        edge = self.graph.edges[e]
        zone = self.scenario.zones.get(edge.target)
        return edge.length - zone.zone_length if zone else edge.length

    def _event(self, t: float, kind: str, cav="", detail="") -> None:
        self.events.append((t, kind, str(cav), str(detail)))

    # ------------------------------------------------------------ routing

    def _route_for_spawn(self, v: _Vehicle) -> Route:
        w = self.weights if self.controller == "proposed" else self.free_weights
        return shortest_path(self.graph, w, v.rec.origin, v.rec.destination)

    def _decision(self, v: _Vehicle) -> Tuple[int, List[int]]:
        """Node where the route can still change, and the committed edges before it."""
        if v.state == "zone":
            fixed = v.path[:2]
        else:
            fixed = v.path[:1]
        return self.graph.edges[fixed[-1]].target, fixed

    def _sense_and_route(self) -> None:
        t = self.t
        cfg = self.config
        window = self.scenario.routing.rate_window
        for e in sorted(self.graph.edges):
            edge = self.graph.edges[e]
            k_true = self.count(e) / edge.length
            k = k_true
            if cfg.noise_eps > 0:
                k = min(max(k + self.rng.uniform(-cfg.noise_eps, cfg.noise_eps), 0.0), edge.fd.k_j)
            self.edge_states[e].record(t, k, window)
            speeds = 0.0
            for vid in self.on_edge[e]:
                speeds += self._current_speed(self.vehicles[vid])
            self.series.append((t, e, k, speeds / edge.length))

        if self.controller != "proposed":
            return
        preds = predict_all(self.graph, self.edge_states)
        self.weights = edge_weights(self.graph, preds, self.policy)
        if not self.rd.enabled:
            return
        tc_abs = {e: p.absolute(t) for e, p in preds.items()}
        due = t - self.last_replan >= self.rd.replan_period - 1e-9
        if not due and self.last_tc is not None:
            for e, tc in tc_abs.items():
                old = self.last_tc[e]
                if math.isinf(tc) and math.isinf(old):
                    continue
                if not (abs(tc - old) <= self.rd.tc_change_threshold):
                    due = True
                    break
        if not due:
            return
        self.last_replan = t
        self.last_tc = tc_abs
        requests = []
        for vid in sorted(self.vehicles):
            v = self.vehicles[vid]
            if v.state not in ("link", "queued", "zone"):
                continue
            node, fixed = self._decision(v)
            rest = v.path[len(fixed):]
            current = None
            if rest:
                nodes = (node,) + tuple(self.graph.edges[x].target for x in rest)
                current = Route(nodes, tuple(rest), 0.0)
            requests.append(CavRequest(vid, node, v.rec.destination, current))
        routes = replan_all(self.graph, self.edge_states, self.policy, requests, preds)
        changes = 0
        for req in requests:
            route = routes.get(req.cav_id)
            if route is None:
                continue
            v = self.vehicles[req.cav_id]
            _, fixed = self._decision(v)
            new_path = list(fixed) + list(route.edges)
            if new_path != v.path:
                changes += 1
                v.path = new_path
                v.rec.routes.append((t, tuple(new_path)))
        flagged = sorted(flag_edges(preds, self.policy.T_thres))
        self.replans.append((t, ";".join(map(str, flagged)), changes))
        self._event(t, "replan", "", f"flagged={len(flagged)} changes={changes}")

    def _current_speed(self, v: _Vehicle) -> float:
        if v.state == "link":
            return v.link_speed
        if v.state == "zone":
            return v.plan.trajectory.state_at(self.t)[1]
        return 0.0

    # ------------------------------------------------------------ movement

    def _spawn(self, v: _Vehicle, t: float) -> bool:
        route = self._route_for_spawn(v)
        e = route.edges[0]
        if not self.has_room(e):
            return False
        v.path = list(route.edges)
        v.rec.routes.append((t, tuple(route.edges)))
        v.rec.spawn_time = t
        v.state = "link"
        v.pos = 0.0
        self.on_edge[e].add(v.id)
        return True

    def _finish(self, v: _Vehicle, t: float) -> None:
        self.on_edge[v.edge].discard(v.id)
        v.state = "done"
        v.rec.exit_time = t
        v.path = v.path[:1]

    def _try_leave_link(self, v: _Vehicle, t: float, v_entry: float) -> bool:
        """Vehicle at its edge boundary at time ``t``: enter the control zone,
        move to the next edge, or leave the network. False if it must wait."""
        edge = self.graph.edges[v.edge]
        node = edge.target
        nxt = v.next_edge
        if node == v.rec.destination:
            nxt = None
        coord = self.coordinators.get(node)
        if coord is None:
            if nxt is None:
                self._finish(v, t)
                return True
            if not self.has_room(nxt):
                return False
            self._move_to(v, nxt, t)
            return True
        if nxt is not None and not self.has_room(nxt):
            return False
        limits = v.limits.with_speed_cap(edge.free_flow_speed)
        adm = coord.request(v.id, edge.id, nxt, t, v_entry, limits)
        if adm.plan is None:
            if adm.reason == "none" and not v.none_logged:
                v.none_logged = True
                self._event(t, "none", v.id, f"node={node}")
            return False
        if self.config.audit:
            # the plan is already committed; audit against the one before it
            problems = audit_trajectory(adm.plan.trajectory, coord.effective_limits(limits),
                                        coord.safety, self._prev_plan(coord, adm.plan),
                                        coord.lateral_conflicts(edge.id, t),
                                        coord.config.solver.sample_step)
            if problems:
                raise SafetyViolation(self._dump(f"cav {v.id} at node {node}: {problems}"))
        if adm.reason != "unconstrained":
            self._event(t, adm.reason, v.id, f"node={node}")
        v.plan = adm.plan
        v.state = "zone"
        v.none_logged = False
        v.pos = self.boundary(edge.id)
        if nxt is not None:
            self.reserved[nxt] += 1
            v.path = [edge.id, nxt] + v.path[2:]
        else:
            v.path = [edge.id]
        v.rec.energy += adm.plan.trajectory.energy()
        if self.trajectories is not None:
            self.trajectories.append((v.id, node, adm.reason, adm.plan))
        return True

    def _prev_plan(self, coord: Coordinator, plan: Plan):
        best = None
        for p in coord.plans.values():
            if p.approach == plan.approach and p.seq < plan.seq:
                if best is None or p.seq > best.seq:
                    best = p
        return best.trajectory if best else None

    def _move_to(self, v: _Vehicle, e: int, t: float) -> None:
        old = v.edge
        self.on_edge[old].discard(v.id)
        v.rec.distance += self.graph.edges[old].length
        v.path = v.path[1:]
        assert v.path[0] == e
        self.on_edge[e].add(v.id)
        v.state = "link"
        v.pos = 0.0
        v.link_speed = self._speeds[e] if e in self._speeds else self.link_speed(e)
        # continue moving for the rest of the step
        v.pos = v.link_speed * (self.t_next - t)

    def _zone_exit(self, v: _Vehicle, t: float) -> None:
        nxt = v.next_edge
        node = self.graph.edges[v.edge].target
        v.plan = None
        if nxt is None or node == v.rec.destination:
            v.rec.distance += self.graph.edges[v.edge].length
            self._finish(v, t)
            return
        self.reserved[nxt] -= 1
        self._move_to(v, nxt, t)

    def step(self) -> None:
        """Advance the world by one step."""
        t0 = self.t
        self.t_next = t1 = (self.k + 1) * self.config.step
        moving = {e: 0 for e in self.graph.edges}
        for v in self.vehicles.values():
            if v.state == "link":
                moving[v.edge] += 1
        self._speeds = {e: self.link_speed(e, moving[e]) for e in self.graph.edges}

        # vehicles waiting at boundaries, oldest first across all edges
        blocked = set()
        while True:
            heads = [(self.vehicles[q[0]].queue_since, q[0], e)
                     for e, q in self.queues.items() if q and e not in blocked]
            if not heads:
                break
            _, vid, e = min(heads)
            v = self.vehicles[vid]
            lim = v.limits.with_speed_cap(self.graph.edges[e].free_flow_speed)
            if self._try_leave_link(v, t0, lim.v_min):
                self.queues[e].popleft()
            else:
                blocked.add(e)

        # departures: earlier blocked spawns first, then new entries
        for n in sorted(self.spawn_queues):
            q = self.spawn_queues[n]
            while q and self._spawn(self.vehicles[q[0]], t0):
                self.vehicles[q.popleft()].link_speed = 0.0
        new_spawns = []
        while self.pending and self.vehicles[self.pending[0]].rec.entry_time < t1:
            vid = self.pending.popleft()
            v = self.vehicles[vid]
            q = self.spawn_queues[v.rec.origin]
            if q or not self._spawn(v, max(v.rec.entry_time, t0)):
                q.append(vid)
            else:
                new_spawns.append(vid)

        events: List[Tuple[float, int, str]] = []
        for vid in sorted(self.vehicles):
            v = self.vehicles[vid]
            if v.state == "link":
                start = max(v.rec.spawn_time, t0) if vid in new_spawns else t0
                speed = self._speeds[v.edge]
                v.link_speed = speed
                b = self.boundary(v.edge)
                if speed > 0 and v.pos + speed * (t1 - start) >= b:
                    ta = start + (b - v.pos) / speed
                    v.pos = b
                    events.append((ta, vid, "arrive"))
                else:
                    v.pos += speed * (t1 - start)
            elif v.state == "zone" and v.plan.trajectory.t_end <= t1:
                events.append((v.plan.trajectory.t_end, vid, "exit"))
        heapq.heapify(events)
        while events:
            ta, vid, kind = heapq.heappop(events)
            v = self.vehicles[vid]
            if kind == "exit":
                self._zone_exit(v, ta)
                continue
            if self.queues[v.edge] or not self._try_leave_link(v, ta, v.link_speed):
                v.state = "queued"
                v.queue_since = ta
                self.queues[v.edge].append(vid)
            elif v.state == "zone" and v.plan.trajectory.t_end <= t1:
                heapq.heappush(events, (v.plan.trajectory.t_end, vid, "exit"))

        self.k += 1
        for vid in sorted(self.vehicles):
            v = self.vehicles[vid]
            if v.state == "zone":
                v.pos = self.boundary(v.edge) + v.plan.trajectory.state_at(t1)[0]
        if self.k % int(round(self.config.sensor_period / self.config.step)) == 0:
            self._sense_and_route()
        for c in self.coordinators.values():
            c.release(t1)
        if self.config.audit:
            self.audit()

    # ------------------------------------------------------------ audit

    def audit(self) -> None:
        """Check every vehicle inside a control zone at the current instant."""
        t = self.t
        by_approach: Dict[int, List[Tuple[float, float, int]]] = {}
        for vid in sorted(self.vehicles):
            v = self.vehicles[vid]
            if v.state != "zone":
                continue
            tr = v.plan.trajectory
            if not tr.t_start <= t <= tr.t_end:
                continue
            edge = self.graph.edges[v.edge]
            coord = self.coordinators[edge.target]
            p, s, u = tr.state_at(t)
            lim = coord.effective_limits(v.limits.with_speed_cap(edge.free_flow_speed))
            if not (lim.v_min - AUDIT_TOL <= s <= lim.v_max + AUDIT_TOL
                    and lim.u_min - AUDIT_TOL <= u <= lim.u_max + AUDIT_TOL):
                raise SafetyViolation(self._dump(
                    f"cav {vid} at node {edge.target}: v={s}, u={u} outside bounds"))
            by_approach.setdefault(v.edge, []).append((p, s, vid))
        for approach, rows in sorted(by_approach.items()):
            coord = self.coordinators[self.graph.edges[approach].target]
            rows.sort()
            for (p_i, s_i, i), (p_k, _, k) in zip(rows[:-1], rows[1:]):
                if p_k - p_i < coord.safety.gap(s_i) - AUDIT_TOL:
                    raise SafetyViolation(self._dump(
                        f"rear-end gap {p_k - p_i:.3f} m between cav {i} and {k} "
                        f"on approach {approach}"))

    def _dump(self, msg: str) -> str:
        rows = [msg, f"t={self.t}"]
        for vid in sorted(self.vehicles):
            v = self.vehicles[vid]
            if v.state in ("link", "queued", "zone"):
                rows.append(f"  cav {vid}: {v.state} edge={v.edge} pos={v.pos:.3f} path={v.path}")
        return "\n".join(rows)

    # ------------------------------------------------------------ results

    @property
    def finished(self) -> bool:
        return not self.pending and all(v.state == "done" for v in self.vehicles.values())

    def report(self) -> MetricsReport:
        recs = [v.rec for v in self.vehicles.values()]
        done = [r for r in recs if r.completed]
        ttt = 0.0
        td = 0.0
        for r in done:
            ttt += r.travel_time
            td += r.delay
        per_edge = {}
        above_total = 0.0
        period = self.config.sensor_period
        for e in sorted(self.graph.edges):
            per_edge[e] = {"max_density_vpm": 0.0, "time_above_critical_s": 0.0,
                           "samples": 0}
        for t, e, k, q in self.series:
            pe = per_edge[e]
            pe["samples"] += 1
            pe["max_density_vpm"] = max(pe["max_density_vpm"], k)
            if k > self.graph.edges[e].fd.k_c:
                pe["time_above_critical_s"] += period
                above_total += period
        active = sum(1 for v in self.vehicles.values() if v.state in ("link", "queued", "zone"))
        not_entered = sum(1 for v in self.vehicles.values() if v.state == "pending")
        return MetricsReport(
            ttt=ttt, total_delay=td, completed=len(done), active=active,
            not_entered=not_entered, energy=sum(r.energy for r in recs),
            time_above_critical=above_total, per_edge=per_edge, series=self.series,
            vehicles=recs)


def run(scenario: Scenario, controller: str = "proposed", sim_config: Optional[SimConfig] = None,
        dump_trajectories: bool = False) -> Tuple[MetricsReport, World]:
    """Simulate to the horizon or until every vehicle has left the network."""
    world = World(scenario, controller, sim_config, dump_trajectories)
    n_steps = int(math.floor(world.config.horizon / world.config.step + 1e-9))
    while world.k < n_steps and not world.finished:
        world.step()
    return world.report(), world


def sense_densities(world: World) -> Dict[int, float]:
    """Current density per edge from vehicle counts (no noise)."""
    return {e: world.count(e) / world.graph.edges[e].length for e in sorted(world.graph.edges)}


def _fmt(x: float) -> str:
    return repr(float(x))


def write_outputs(report: MetricsReport, world: World, out_dir, header: Optional[dict] = None) -> None:
    """Write metrics.json, edges.csv, events.csv, replans.csv and, when
    collected, trajectories.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(json.dumps(report.summary(), sort_keys=True, indent=2) + "\n")
    with open(out / "edges.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "edge", "k", "q"])
        for t, e, k, q in report.series:
            w.writerow([_fmt(t), e, _fmt(k), _fmt(q)])
    with open(out / "events.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "kind", "cav", "detail"])
        for row in world.events:
            w.writerow([_fmt(row[0]), *row[1:]])
    with open(out / "replans.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "flagged_edges", "route_changes"])
        for t, flagged, changes in world.replans:
            w.writerow([_fmt(t), flagged, changes])
    if world.trajectories is not None:
        step = world.scenario.coordination.solver.sample_step
        with open(out / "trajectories.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["cav", "node", "approach", "kind", "t", "p", "v", "u"])
            for vid, node, kind, plan in world.trajectories:
                for t, p, v, u in plan.trajectory.sample(step):
                    w.writerow([vid, node, plan.approach, kind, _fmt(t), _fmt(p), _fmt(v), _fmt(u)])
    if header is not None:
        (out / "run.json").write_text(json.dumps(header, sort_keys=True, indent=2) + "\n")
