"""Energy-optimal double-integrator trajectories through a control zone.

A trajectory is a chain of segments with piecewise-linear control, so
position is cubic in time on each segment. Positions are measured from the
vehicle's control-zone entry along its path; the zone exit is at
``zone_length``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .limits import SolverConfig, VehicleLimits

log = logging.getLogger(__name__)


class InfeasibleTrajectory(ValueError):
    """The requested trajectory violates speed or control bounds."""


@dataclass(frozen=True)
class CavState:
    id: int
    p: float  # m from zone entry
    v: float  # m/s
    t0: float  # s, time at which (p, v) holds
    path: Tuple[int, Optional[int]] = (0, None)  # (approach edge, exit edge)


@dataclass(frozen=True)
class ExitTimeWindow:
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if self.t_lo > self.t_hi:
            raise ValueError(f"empty window [{self.t_lo}, {self.t_hi}]")


@dataclass(frozen=True)
class TrajectorySegment:
    """Cubic position on ``[t_start, t_end]`` in local time ``tau = t - t_start``:
    ``p = p0 + v0*tau + u0*tau**2/2 + jerk*tau**3/6``."""

    t_start: float
    t_end: float
    p0: float
    v0: float
    u0: float
    jerk: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def position(self, t):
        tau = t - self.t_start
        return self.p0 + tau * (self.v0 + tau * (self.u0 / 2 + tau * self.jerk / 6))

    def speed(self, t):
        tau = t - self.t_start
        return self.v0 + tau * (self.u0 + tau * self.jerk / 2)

    def control(self, t):
        return self.u0 + (t - self.t_start) * self.jerk

    def energy(self) -> float:
        h = self.duration
        a, j = self.u0, self.jerk
        return 0.5 * (a * a * h + a * j * h * h + j * j * h ** 3 / 3.0)

    def control_coefficients(self) -> Tuple[float, float]:
        """``(slope, intercept)`` of the control in absolute time."""
        return self.jerk, self.u0 - self.jerk * self.t_start

    def speed_range(self) -> Tuple[float, float]:
        ts = [self.t_start, self.t_end]
        if self.jerk != 0.0:
            t_star = self.t_start - self.u0 / self.jerk
            if self.t_start < t_star < self.t_end:
                ts.append(t_star)
        vs = [self.speed(t) for t in ts]
        return min(vs), max(vs)


@dataclass(frozen=True)
class Trajectory:
    segments: Tuple[TrajectorySegment, ...]
    kind: str = "unconstrained"

    @property
    def t_start(self) -> float:
        return self.segments[0].t_start

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    @property
    def p_end(self) -> float:
        s = self.segments[-1]
        return s.position(s.t_end)

    @property
    def v_end(self) -> float:
        s = self.segments[-1]
        return s.speed(s.t_end)

    @cached_property
    def _coeffs(self) -> np.ndarray:
        return np.array([[g.t_start, g.p0, g.v0, g.u0, g.jerk] for g in self.segments])

    def _eval(self, t, attr: str, extend: bool):
        t_arr = np.asarray(t, dtype=float)
        c = self._coeffs
        idx = np.clip(np.searchsorted(c[:, 0], t_arr, side="right") - 1, 0, len(c) - 1)
        tau = t_arr - c[idx, 0]
        u0, j = c[idx, 3], c[idx, 4]
        if attr == "position":
            out = c[idx, 1] + tau * (c[idx, 2] + tau * (u0 / 2 + tau * j / 6))
        elif attr == "speed":
            out = c[idx, 2] + tau * (u0 + tau * j / 2)
        else:
            out = u0 + tau * j
        if extend:
            after = t_arr > self.t_end
            if np.any(after):
                # constant-speed continuation beyond the zone exit
                if attr == "position":
                    out = np.where(after, self.p_end + self.v_end * (t_arr - self.t_end), out)
                elif attr == "speed":
                    out = np.where(after, self.v_end, out)
                else:
                    out = np.where(after, 0.0, out)
        return out if out.ndim else float(out)

    def state_at(self, t: float) -> Tuple[float, float, float]:
        """Scalar ``(p, v, u)`` at ``t`` inside the trajectory."""
        seg = self.segments[0]
        for s in self.segments:
            if s.t_start <= t:
                seg = s
            else:
                break
        return seg.position(t), seg.speed(t), seg.control(t)

    def position(self, t, extend: bool = False):
        return self._eval(t, "position", extend)

    def speed(self, t, extend: bool = False):
        return self._eval(t, "speed", extend)

    def control(self, t, extend: bool = False):
        return self._eval(t, "control", extend)

    def energy(self) -> float:
        return sum(s.energy() for s in self.segments)

    def control_coefficients(self) -> List[Tuple[float, float]]:
        return [s.control_coefficients() for s in self.segments]

    @cached_property
    def _time_cache(self) -> dict:
        return {}

    def time_at_position(self, p: float, extend: bool = True) -> float:
        """First time the trajectory reaches position ``p`` (speeds assumed positive)."""
        key = (p, extend)
        if key not in self._time_cache:
            self._time_cache[key] = self._time_at_position(p, extend)
        return self._time_cache[key]

    def _time_at_position(self, p: float, extend: bool) -> float:
        for seg in self.segments:
            p_lo, p_hi = seg.p0, seg.position(seg.t_end)
            if p_lo <= p <= p_hi:
                if p == p_lo:
                    return seg.t_start
                if p == p_hi:
                    return seg.t_end
                return brentq(lambda t: seg.position(t) - p, seg.t_start, seg.t_end,
                              xtol=1e-12, rtol=4 * np.finfo(float).eps)
        if p < self.segments[0].p0:
            raise ValueError(f"position {p} lies before the trajectory start")
        if extend and self.v_end > 0:
            return self.t_end + (p - self.p_end) / self.v_end
        raise ValueError(f"position {p} is never reached")

    def within_limits(self, limits: VehicleLimits, tol: float = 1e-9) -> bool:
        for seg in self.segments:
            u_a, u_b = seg.u0, seg.control(seg.t_end)
            if min(u_a, u_b) < limits.u_min - tol or max(u_a, u_b) > limits.u_max + tol:
                return False
            v_lo, v_hi = seg.speed_range()
            if v_lo < limits.v_min - tol or v_hi > limits.v_max + tol:
                return False
        return True

    def sample(self, step: float) -> np.ndarray:
        """Rows ``(t, p, v, u)`` at the start, at every multiple of ``step``
        inside the trajectory, and at the end."""
        t = sample_times(self.t_start, self.t_end, step)
        return np.column_stack([t, self.position(t), self.speed(t), self.control(t)])


def sample_times(t_start: float, t_end: float, step: float) -> np.ndarray:
    """Absolute grid ``k*step`` within ``[t_start, t_end]`` plus both ends.

    Sampling on the absolute grid makes planners and the simulation audit
    look at the same instants when their steps agree.
    """
    k0 = int(math.ceil(t_start / step - 1e-9))
    k1 = int(math.floor(t_end / step + 1e-9))
    grid = step * np.arange(k0, k1 + 1)
    grid = grid[(grid > t_start) & (grid < t_end)]
    return np.concatenate([[t_start], grid, [t_end]])


def _min_traversal(v0: float, d: float, accel: float, v_cap: float) -> float:
    """Time to cover ``d`` starting at ``v0`` with constant ``accel`` until
    reaching ``v_cap``, then cruising. ``accel`` may be negative."""
    if d <= 0:
        return 0.0
    if accel == 0 or v0 == v_cap:
        return d / v0
    t1 = (v_cap - v0) / accel
    d1 = (v_cap * v_cap - v0 * v0) / (2.0 * accel)
    if d1 >= d:
        # cap never reached inside the zone
        disc = max(v0 * v0 + 2.0 * accel * d, 0.0)
        return (-v0 + math.sqrt(disc)) / accel
    return t1 + (d - d1) / v_cap


def exit_time_window(state: CavState, limits: VehicleLimits, zone_length: float) -> ExitTimeWindow:
    """Earliest exit (full acceleration to ``v_max``, then cruise) and latest
    exit (full braking to ``v_min``, then cruise)."""
    if zone_length <= 0:
        raise ValueError("zone_length must be positive")
    d = zone_length - state.p
    v0 = min(max(state.v, limits.v_min), limits.v_max)
    t_fast = _min_traversal(v0, d, limits.u_max, limits.v_max)
    t_slow = _min_traversal(v0, d, limits.u_min, limits.v_min)
    return ExitTimeWindow(state.t0 + t_fast, state.t0 + t_slow)


def unconstrained_coefficient(d, v0, T):
    """Control magnitude ``a`` of the optimal profile ``u = a (T - tau)``.

    Zero control at the exit is the transversality condition of a free exit
    speed; the position condition then gives ``a = 3 (d - v0 T) / T**3``.
    Works elementwise on arrays of ``T``.
    """
    return 3.0 * (d - v0 * T) / T ** 3


def unconstrained_trajectory(state: CavState, t_f: float, zone_length: float,
                             limits: Optional[VehicleLimits] = None) -> Trajectory:
    """Minimum ``1/2 int u^2`` trajectory from ``state`` to the zone exit at ``t_f``.

    Raises InfeasibleTrajectory when ``limits`` are given and violated.
    """
    T = t_f - state.t0
    if T <= 0:
        raise ValueError(f"exit time {t_f} not after entry time {state.t0}")
    a = unconstrained_coefficient(zone_length - state.p, state.v, T)
    traj = Trajectory((TrajectorySegment(state.t0, t_f, state.p, state.v, a * T, -a),))
    if limits is not None and not traj.within_limits(limits):
        raise InfeasibleTrajectory(
            f"cav {state.id}: exit at {t_f:.3f} needs u0={a * T:.3f}, "
            f"v_f={traj.v_end:.3f}")
    return traj


def _interior_system(state: CavState, crossings: Sequence[Tuple[float, float]],
                     t_f, zone_length: float) -> np.ndarray:
    """Segment coefficients ``(p, v, u, jerk)`` for a fixed exit time.

    Conditions: initial position and speed; at each interior crossing the
    position equals the conflict position from both sides, and speed and
    control are continuous; at the exit the position equals the zone length
    and the control vanishes. ``t_f`` may be an array, giving one solution
    per exit time with shape ``(len(t_f), segments, 4)``.
    """
    times = [state.t0] + [tc for _, tc in crossings]
    m = len(times)
    n = 4 * m
    A = np.zeros((n, n))
    b = np.zeros(n)
    A[0, 0] = 1.0
    b[0] = state.p
    A[1, 1] = 1.0
    b[1] = state.v
    row = 2
    for s, (pn, _) in enumerate(crossings):
        h = times[s + 1] - times[s]
        o, nxt = 4 * s, 4 * (s + 1)
        A[row, o:o + 4] = [1.0, h, h * h / 2, h ** 3 / 6]
        b[row] = pn
        A[row + 1, nxt] = 1.0
        b[row + 1] = pn
        A[row + 2, o + 1:o + 4] = [1.0, h, h * h / 2]
        A[row + 2, nxt + 1] = -1.0
        A[row + 3, o + 2:o + 4] = [1.0, h]
        A[row + 3, nxt + 2] = -1.0
        row += 4
    # only the exit rows depend on the exit time
    t_arr = np.atleast_1d(np.asarray(t_f, dtype=float))
    h = t_arr - times[-1]
    o = 4 * (m - 1)
    A_all = np.broadcast_to(A, (len(h), n, n)).copy()
    b_all = np.broadcast_to(b, (len(h), n)).copy()
    A_all[:, row, o:o + 4] = np.stack([np.ones_like(h), h, h * h / 2, h ** 3 / 6], axis=1)
    b_all[:, row] = zone_length
    A_all[:, row + 1, o + 2] = 1.0
    A_all[:, row + 1, o + 3] = h
    coeffs = np.linalg.solve(A_all, b_all[..., None])[..., 0].reshape(len(h), m, 4)
    return coeffs if np.ndim(t_f) else coeffs[0]


def _build(state, crossings, t_f, coeffs, kind) -> Trajectory:
    times = [state.t0] + [tc for _, tc in crossings] + [t_f]
    segs = tuple(TrajectorySegment(times[i], times[i + 1], *map(float, coeffs[i]))
                 for i in range(len(coeffs)))
    return Trajectory(segs, kind)


def interior_point_trajectory(state: CavState, crossings: Sequence[Tuple[float, float]],
                              t_f: float, zone_length: float) -> Trajectory:
    """Minimum-energy trajectory with fixed exit time passing each
    ``(position, time)`` crossing."""
    return _build(state, crossings, t_f,
                  _interior_system(state, crossings, t_f, zone_length), "fallback")


def _free_time_residual(state, crossings, t_f, zone_length, w_time):
    # Hamiltonian at a free exit time equals -w; with zero exit control this is
    # (control slope on the last branch) * (exit speed) + w = 0
    c = _interior_system(state, crossings, t_f, zone_length)[..., -1, :]
    h = np.asarray(t_f) - (crossings[-1][1] if crossings else state.t0)
    v_f = c[..., 1] + c[..., 2] * h + c[..., 3] * h * h / 2
    return c[..., 3] * v_f + w_time


def slowest_trajectory(state: CavState, limits: VehicleLimits, zone_length: float,
                       kind: str = "last_resort") -> Trajectory:
    """Brake at ``u_min`` down to ``v_min`` and cruise to the exit."""
    v0 = min(max(state.v, limits.v_min), limits.v_max)
    d = zone_length - state.p
    t_brake = (v0 - limits.v_min) / -limits.u_min
    d_brake = (v0 * v0 - limits.v_min ** 2) / (-2.0 * limits.u_min)
    segs = []
    if d_brake >= d:
        t_end = state.t0 + _min_traversal(v0, d, limits.u_min, limits.v_min)
        segs.append(TrajectorySegment(state.t0, t_end, state.p, v0, limits.u_min, 0.0))
    else:
        t1 = state.t0 + t_brake
        if t_brake > 0:
            segs.append(TrajectorySegment(state.t0, t1, state.p, v0, limits.u_min, 0.0))
        p1 = state.p + d_brake
        segs.append(TrajectorySegment(t1, t1 + (zone_length - p1) / limits.v_min,
                                      p1, limits.v_min, 0.0, 0.0))
    return Trajectory(tuple(segs), kind)


def project_to_limits(traj: Trajectory, limits: VehicleLimits, zone_length: float,
                      step: float) -> Trajectory:
    """Clip a trajectory's control into the admissible box and re-integrate.

    The control is held constant over each ``step`` and further limited so
    the speed stays within ``[v_min, v_max]``; past the original exit time
    the vehicle cruises until it reaches the zone exit.
    """
    t0 = traj.t_start
    p = float(traj.position(t0))
    v = min(max(float(traj.speed(t0)), limits.v_min), limits.v_max)
    n_nom = int(math.ceil((traj.t_end - t0) / step))
    mid = t0 + step * (np.arange(n_nom) + 0.5)
    u_nom = np.where(mid < traj.t_end, traj.control(mid), 0.0)
    segs = []
    k = 0
    while True:
        t = t0 + k * step
        u = min(max(float(u_nom[k]) if k < n_nom else 0.0, limits.u_min), limits.u_max)
        u = min(max(u, (limits.v_min - v) / step), (limits.v_max - v) / step)
        seg = TrajectorySegment(t, t + step, p, v, u, 0.0)
        p_next = seg.position(seg.t_end)
        if p_next >= zone_length:
            if u == 0.0:
                h = (zone_length - p) / v
            else:
                h = (-v + math.sqrt(max(v * v + 2 * u * (zone_length - p), 0.0))) / u
            segs.append(TrajectorySegment(t, t + h, p, v, u, 0.0))
            return Trajectory(_merge_constant(segs), "projected")
        segs.append(seg)
        p, v = p_next, seg.speed(seg.t_end)
        k += 1
        if k > 10_000_000:
            raise RuntimeError("projection did not reach the zone exit")


def _merge_constant(segs: List[TrajectorySegment]) -> Tuple[TrajectorySegment, ...]:
    """Join consecutive constant-control segments with equal control."""
    out = [segs[0]]
    for g in segs[1:]:
        last = out[-1]
        if last.jerk == 0.0 and g.jerk == 0.0 and last.u0 == g.u0:
            out[-1] = TrajectorySegment(last.t_start, g.t_end, last.p0, last.v0, last.u0, 0.0)
        else:
            out.append(g)
    return tuple(out)


def constrained_fallback(state: CavState, crossings: Sequence[Tuple[float, float]],
                         limits: VehicleLimits, config: SolverConfig,
                         zone_length: float) -> Trajectory:
    """Energy-plus-weighted-time optimal trajectory through imposed conflict crossings.

    ``crossings`` is a list of ``(position, time)`` pairs the vehicle must
    meet; the exit time is free and priced at ``config.w_time`` per second.
    The control is linear on each branch and continuous with a kink at every
    crossing. For a fixed exit time the branch coefficients solve a linear
    system, so the exit time is the root of the one-dimensional
    free-final-time condition, bracketed by a scan and refined with Brent's
    method.

    If no root is found, the slowest admissible profile is returned. If the
    solution leaves the speed or control box it is projected back into it.
    Both cases are logged and flagged through ``Trajectory.kind``.
    """
    crossings = sorted((float(p), float(t)) for p, t in crossings)
    prev_p, prev_t = state.p, state.t0
    for pn, tc in crossings:
        if not (pn > prev_p and tc > prev_t and pn < zone_length):
            raise ValueError(f"crossings must advance in position and time, got {crossings}")
        prev_p, prev_t = pn, tc

    def g(h):
        return _free_time_residual(state, crossings, prev_t + h, zone_length, config.w_time)

    hs = np.geomspace(1e-2, 1e4, 241)
    t_f = None
    with np.errstate(all="ignore"):
        gs = g(hs)
        sign_change = np.isfinite(gs[:-1]) & np.isfinite(gs[1:]) & (gs[:-1] < 0) & (gs[1:] >= 0)
        hit = np.flatnonzero(sign_change)
        if hit.size:
            i = hit[0]
            t_f = prev_t + brentq(lambda h: float(g(h)), hs[i], hs[i + 1], xtol=1e-12)
    if t_f is None:
        log.warning("cav %s: free-time condition has no root, using slowest profile", state.id)
        return slowest_trajectory(state, limits, zone_length)

    traj = interior_point_trajectory(state, crossings, t_f, zone_length)
    if not traj.within_limits(limits):
        log.debug("cav %s: fallback leaves the admissible box, projecting", state.id)
        return project_to_limits(traj, limits, zone_length, config.sample_step)
    return traj
