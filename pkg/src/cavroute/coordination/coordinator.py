"""Per-intersection coordinator: FIFO admission, scheduling and constraint audit."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .limits import CoordinationConfig, VehicleLimits, tightened_constraints
from .schedule import LateralConflict, schedule_exit_time
from .trajectory import (CavState, Trajectory, _min_traversal, constrained_fallback,
                         exit_time_window, sample_times,
                         unconstrained_trajectory)

log = logging.getLogger(__name__)

# extra headway imposed on fallback crossings so root-finding noise never
# lands exactly on the constraint boundary
CROSSING_MARGIN = 1e-3
AUDIT_TOL = 1e-6


@dataclass(frozen=True)
class Plan:
    cav_id: int
    approach: int
    exit: Optional[int]
    trajectory: Trajectory
    seq: int  # admission order


@dataclass(frozen=True)
class Admission:
    plan: Optional[Plan]
    reason: str  # "unconstrained", "fallback", "projected", "last_resort", "gap", "none"


class SafetyViolation(AssertionError):
    pass


class Coordinator:
    """Stores committed trajectories of one control zone and plans new entries.

    ``zone`` needs ``node``, ``zone_length`` and ``conflict(a, b)`` returning
    the conflict-point distances along approaches ``a`` and ``b`` or None.
    """

    def __init__(self, zone, config: CoordinationConfig):
        self.zone = zone
        self.config = config
        self.safety, self.limits = tightened_constraints(
            config.safety, config.uncertainty, config.limits)
        self.plans: Dict[int, Plan] = {}
        self.last_by_approach: Dict[int, Plan] = {}
        self._seq = 0

    @property
    def zone_length(self) -> float:
        return self.zone.zone_length

    def effective_limits(self, limits: Optional[VehicleLimits]) -> VehicleLimits:
        if limits is None:
            return self.limits
        _, eff = tightened_constraints(self.config.safety, self.config.uncertainty, limits)
        return eff

    def entry_speed(self, v: float, limits: Optional[VehicleLimits] = None) -> float:
        lim = self.effective_limits(limits)
        return min(max(v, lim.v_min), lim.v_max)

    def predecessor(self, approach: int) -> Optional[Plan]:
        return self.last_by_approach.get(approach)

    def lateral_conflicts(self, approach: int, t0: float) -> List[LateralConflict]:
        out = []
        for plan in sorted(self.plans.values(), key=lambda p: p.seq):
            if plan.approach == approach:
                continue
            dists = self.zone.conflict(approach, plan.approach)
            if dists is None:
                continue
            c = LateralConflict(plan.trajectory, dists[0], dists[1])
            if c.other_crossing_time() + self.safety.t_h < t0:
                continue
            out.append(c)
        return out

    def gap_ok(self, approach: int, t0: float, v0: float) -> bool:
        pred = self.predecessor(approach)
        if pred is None:
            return True
        return float(pred.trajectory.position(t0, extend=True)) >= self.safety.gap(v0)

    def request(self, cav_id: int, approach: int, exit: Optional[int], t0: float, v0: float,
                limits: Optional[VehicleLimits] = None) -> Admission:
        """Try to admit a vehicle reaching the zone boundary at ``t0``."""
        lim = self.effective_limits(limits)
        v0 = min(max(v0, lim.v_min), lim.v_max)
        if not self.gap_ok(approach, t0, v0):
            return Admission(None, "gap")
        state = CavState(cav_id, 0.0, v0, t0, (approach, exit))
        L = self.zone_length
        pred = self.predecessor(approach)
        pred_traj = pred.trajectory if pred else None
        lateral = self.lateral_conflicts(approach, t0)
        window = exit_time_window(state, lim, L)
        t_f = schedule_exit_time(state, window, L, lim, self.safety, self.config.solver,
                                 predecessor=pred_traj, lateral=lateral)
        if t_f is not None:
            traj = unconstrained_trajectory(state, t_f, L)
        else:
            crossings = self._imposed_crossings(state, lateral, lim)
            if not crossings:
                return Admission(None, "none")
            try:
                traj = constrained_fallback(state, crossings, lim, self.config.solver, L)
            except (ValueError, np.linalg.LinAlgError) as exc:
                log.debug("cav %s: fallback rejected: %s", cav_id, exc)
                return Admission(None, "none")
            if audit_trajectory(traj, lim, self.safety, pred_traj, lateral,
                                self.config.solver.sample_step):
                return Admission(None, "none")
        plan = Plan(cav_id, approach, exit, traj, self._seq)
        self._commit(plan)
        return Admission(plan, traj.kind)

    def _imposed_crossings(self, state: CavState, lateral: List[LateralConflict],
                           lim: VehicleLimits) -> List[Tuple[float, float]]:
        # FIFO: pass every shared conflict point one headway after the last
        # committed vehicle there, and no earlier than physically reachable
        by_point: Dict[float, float] = {}
        for c in lateral:
            t_req = c.other_crossing_time() + self.safety.t_h + CROSSING_MARGIN
            by_point[c.p_self] = max(by_point.get(c.p_self, -np.inf), t_req)
        out = []
        prev_p, prev_t = state.p, state.t0
        for p in sorted(by_point):
            earliest = prev_t + _min_traversal(max(state.v, lim.v_min), p - prev_p,
                                               lim.u_max, lim.v_max)
            t_c = max(by_point[p], earliest)
            out.append((p, t_c))
            prev_p, prev_t = p, t_c
        return out

    def _commit(self, plan: Plan) -> None:
        self._seq += 1
        self.plans[plan.cav_id] = plan
        self.last_by_approach[plan.approach] = plan

    def release(self, now: float) -> None:
        """Forget plans that can no longer constrain anyone entering at ``now``."""
        horizon = self.safety.t_h + 1.0
        for cav_id in [c for c, p in self.plans.items() if p.trajectory.t_end + horizon < now]:
            del self.plans[cav_id]


def audit_trajectory(traj: Trajectory, limits: VehicleLimits, safety,
                     predecessor: Optional[Trajectory], lateral, step: float,
                     tol: float = AUDIT_TOL) -> List[str]:
    """Constraint violations of ``traj`` against bounds, its predecessor and
    the committed conflicting trajectories. Empty list when safe."""
    problems = []
    if not traj.within_limits(limits, tol):
        problems.append("speed/control bounds")
    if predecessor is not None:
        t = sample_times(traj.t_start, traj.t_end, step)
        gap = predecessor.position(t, extend=True) - traj.position(t)
        need = safety.gap(traj.speed(t))
        if np.any(gap < need - tol):
            problems.append(f"rear-end gap short by {float(np.max(need - gap)):.3g} m")
    for c in lateral:
        dt = abs(traj.time_at_position(c.p_self) - c.other_crossing_time())
        if dt < safety.t_h - tol:
            problems.append(f"conflict headway {dt:.3f} s < {safety.t_h} s")
    return problems
