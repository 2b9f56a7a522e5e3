"""Minimum exit-time search over unconstrained energy-optimal trajectories."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .limits import SafetyParams, SolverConfig, VehicleLimits
from .trajectory import CavState, ExitTimeWindow, Trajectory, unconstrained_coefficient


@dataclass(frozen=True)
class LateralConflict:
    """A committed vehicle sharing a conflict point with the planning vehicle."""

    other: Trajectory
    p_self: float  # conflict point distance along the planning vehicle's path
    p_other: float  # same point along the other vehicle's path

    def other_crossing_time(self) -> float:
        return self.other.time_at_position(self.p_other)


_CHUNK = 64  # candidates checked per vectorized batch
_BOX_TOL = 1e-9  # absorbs rounding when a candidate sits exactly on a bound


def candidate_exit_times(window: ExitTimeWindow, dt: float) -> np.ndarray:
    n = int(np.floor((window.t_hi - window.t_lo) / dt + 1e-9))
    return window.t_lo + dt * np.arange(n + 1)


def _crossing_times(p0, v0, a, T, target, iters=50):
    """Time (local) at which each candidate profile reaches ``target``; bisection
    on ``[0, T]``, valid where the profile is increasing."""
    lo = np.zeros_like(T)
    hi = T.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        p = p0 + v0 * mid + a * (T * mid ** 2 / 2 - mid ** 3 / 6)
        below = p < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def feasible_mask(state: CavState, t_f: np.ndarray, zone_length: float,
                  limits: VehicleLimits, safety: SafetyParams,
                  predecessor: Optional[Trajectory] = None,
                  follower: Optional[Trajectory] = None,
                  lateral: Sequence[LateralConflict] = (),
                  sample_step: float = 0.1) -> np.ndarray:
    """Which candidate exit times give an unconstrained trajectory that meets
    the speed/control box, the rear-end gap to the predecessor and from the
    follower, and the headway at every shared conflict point."""
    t_f = np.asarray(t_f, dtype=float)
    ok = np.zeros(t_f.shape, dtype=bool)
    d = zone_length - state.p
    p0, v0 = state.p, state.v
    if not limits.v_min <= v0 <= limits.v_max:
        return ok
    T = t_f - state.t0
    a = unconstrained_coefficient(d, v0, T)
    u0 = a * T
    v_f = v0 + a * T * T / 2
    tol = _BOX_TOL
    live = np.flatnonzero((u0 >= limits.u_min - tol) & (u0 <= limits.u_max + tol)
                          & (v_f >= limits.v_min - tol) & (v_f <= limits.v_max + tol))

    # cheapest test first; each stage only sees the survivors of the last
    by_point = {}
    for conflict in lateral:
        by_point.setdefault(conflict.p_self, []).append(conflict.other_crossing_time())
    for p_self in sorted(by_point):
        if live.size == 0:
            return ok
        t_self = state.t0 + _crossing_times(p0, v0, a[live], T[live], p_self)
        t_other = np.asarray(by_point[p_self])
        sep = np.abs(t_self[:, None] - t_other[None, :]).min(axis=1)
        live = live[sep >= safety.t_h]

    if live.size and (predecessor is not None or follower is not None):
        Tl, al, tfl = T[live], a[live], t_f[live]
        # absolute sampling grid shared with the runtime audit, plus the
        # entry and exit instants of each candidate
        k0 = int(np.ceil(state.t0 / sample_step - 1e-9))
        k1 = int(np.floor(tfl.max() / sample_step + 1e-9))
        grid = sample_step * np.arange(k0, k1 + 1)
        grid = grid[grid > state.t0]
        t_abs = np.concatenate([[state.t0], grid])[:, None] + np.zeros_like(Tl)[None, :]
        t_abs = np.vstack([t_abs, tfl[None, :]])
        tau = t_abs - state.t0
        inside = tau <= Tl[None, :]
        tau = np.minimum(tau, Tl[None, :])
        p_all = p0 + v0 * tau + al * (Tl * tau ** 2 / 2 - tau ** 3 / 6)
        v_all = v0 + al * (Tl * tau - tau ** 2 / 2)
        good = np.ones(live.shape, dtype=bool)
        if predecessor is not None:
            p_k = predecessor.position(t_abs, extend=True)
            viol = (p_k - p_all < safety.gap(v_all)) & inside
            good &= ~viol.any(axis=0)
        if follower is not None:
            on = inside & (t_abs >= follower.t_start) & (t_abs <= follower.t_end)
            t_cl = np.clip(t_abs, follower.t_start, follower.t_end)
            viol = (p_all - follower.position(t_cl) < safety.gap(follower.speed(t_cl))) & on
            good &= ~viol.any(axis=0)
        live = live[good]
    ok[live] = True
    return ok


def schedule_exit_time(state: CavState, window: ExitTimeWindow, zone_length: float,
                       limits: VehicleLimits, safety: SafetyParams, config: SolverConfig,
                       predecessor: Optional[Trajectory] = None,
                       follower: Optional[Trajectory] = None,
                       lateral: Sequence[LateralConflict] = ()) -> Optional[float]:
    """Earliest exit time on the grid ``t_lo, t_lo + dt, ...`` not beyond
    ``t_hi`` whose unconstrained trajectory satisfies every constraint.

    Returns None when the grid is exhausted. Every constraint is rechecked at
    the final candidate, so the returned time is feasible for all of them at
    once.
    """
    cands = candidate_exit_times(window, config.dt)
    cands = cands[cands > state.t0]
    if cands.size == 0:
        return None
    for i in range(0, cands.size, _CHUNK):
        chunk = cands[i:i + _CHUNK]
        ok = feasible_mask(state, chunk, zone_length, limits, safety, predecessor,
                           follower, lateral, config.sample_step)
        hits = np.flatnonzero(ok)
        if hits.size:
            return float(chunk[hits[0]])
    return None
