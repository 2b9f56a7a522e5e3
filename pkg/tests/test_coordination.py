import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavroute.coordination import (CavState, CoordinationConfig, Coordinator,
                                   LateralConflict, SafetyParams, SolverConfig,
                                   UncertaintyBounds, VehicleLimits, audit_trajectory,
                                   exit_time_window, schedule_exit_time,
                                   unconstrained_trajectory)
from cavroute.coordination.trajectory import ExitTimeWindow
from cavroute.network import ConflictPoint, ControlZoneSpec

LIM = VehicleLimits(-3.0, 2.5, 2.0, 15.0)
SAFE = SafetyParams(2.0, 0.8, 1.5)
SOLVER = SolverConfig(w_time=0.5, dt=0.1, sample_step=0.1)
L = 100.0


def brute_force_exit(state, window, lateral_times, p_conf, t_h, dt=0.1):
    """Scan the dt grid; check bounds and headway on a dense time grid."""
    n = int(np.floor((window.t_hi - window.t_lo) / dt + 1e-9))
    for i in range(n + 1):
        tf = window.t_lo + i * dt
        T = tf - state.t0
        a = 3 * (L - state.v * T) / T ** 3
        tau = np.linspace(0, T, 4001)
        u = a * (T - tau)
        v = state.v + a * (T * tau - tau ** 2 / 2)
        p = state.v * tau + a * (T * tau ** 2 / 2 - tau ** 3 / 6)
        if u.min() < LIM.u_min - 1e-9 or u.max() > LIM.u_max + 1e-9:
            continue
        if v.min() < LIM.v_min - 1e-9 or v.max() > LIM.v_max + 1e-9:
            continue
        t_cross = state.t0 + np.interp(p_conf, p, tau)
        if all(abs(t_cross - t_o) >= t_h for t_o in lateral_times):
            return tf
    return None


def test_empty_intersection_gives_earliest_exit():
    s = CavState(1, 0.0, 15.0, 0.0)
    w = exit_time_window(s, LIM, L)
    assert schedule_exit_time(s, w, L, LIM, SAFE, SOLVER) == pytest.approx(w.t_lo)


def test_empty_intersection_below_speed_cap():
    # the bang-bang earliest exit is not reachable with a linear control
    # profile (exit speed would exceed v_max); the first feasible grid point is
    s = CavState(1, 0.0, 10.0, 0.0)
    w = exit_time_window(s, LIM, L)
    tf = schedule_exit_time(s, w, L, LIM, SAFE, SOLVER)
    assert tf == pytest.approx(brute_force_exit(s, w, [], 50.0, 1.5), abs=1e-9)
    assert tf == pytest.approx(7.5, abs=1e-9)


def test_crossing_pair_matches_brute_force():
    first = CavState(1, 0.0, 10.0, 0.0)
    w1 = exit_time_window(first, LIM, L)
    tr1 = unconstrained_trajectory(first, schedule_exit_time(first, w1, L, LIM, SAFE, SOLVER), L)
    second = CavState(2, 0.0, 10.0, 0.0)
    w2 = exit_time_window(second, LIM, L)
    conflict = LateralConflict(tr1, 60.0, 60.0)
    tf = schedule_exit_time(second, w2, L, LIM, SAFE, SOLVER, lateral=[conflict])
    tr2 = unconstrained_trajectory(second, tf, L)
    t1 = tr1.time_at_position(60.0)
    assert tr2.time_at_position(60.0) >= t1 + 1.5 - 1e-9
    oracle = brute_force_exit(second, w2, [t1], 60.0, 1.5)
    assert tf == pytest.approx(oracle, abs=1e-9)


def test_short_window_returns_none():
    first = CavState(1, 0.0, 15.0, 0.0)
    tr1 = unconstrained_trajectory(first, L / 15.0, L)
    s = CavState(2, 0.0, 15.0, 0.0)
    # exit window allows only the same crossing instant
    w = ExitTimeWindow(L / 15.0, L / 15.0 + 0.5)
    assert schedule_exit_time(s, w, L, LIM, SAFE, SOLVER,
                              lateral=[LateralConflict(tr1, 50.0, 50.0)]) is None


def test_rear_end_gap_respected():
    lead = unconstrained_trajectory(CavState(1, 0.0, 12.0, 0.0), 9.0, L)
    s = CavState(2, 0.0, 12.0, 1.0)
    tf = schedule_exit_time(s, exit_time_window(s, LIM, L), L, LIM, SAFE, SOLVER,
                            predecessor=lead)
    tr = unconstrained_trajectory(s, tf, L)
    assert audit_trajectory(tr, LIM, SAFE, lead, [], 0.01) == []


@given(st.floats(6.0, 14.0), st.floats(0.0, 3.0), st.floats(1.0, 2.5), st.floats(0.1, 1.0))
@settings(max_examples=40, deadline=None)
def test_larger_headway_never_earlier(v0, t_enter, t_h, extra):
    first = unconstrained_trajectory(CavState(1, 0.0, 12.0, 0.0), 100.0 / 12.0, L)
    s = CavState(2, 0.0, v0, t_enter)
    w = exit_time_window(s, LIM, L)
    lat = [LateralConflict(first, 55.0, 45.0)]
    a = schedule_exit_time(s, w, L, LIM, SafetyParams(2.0, 0.8, t_h), SOLVER, lateral=lat)
    b = schedule_exit_time(s, w, L, LIM, SafetyParams(2.0, 0.8, t_h + extra), SOLVER, lateral=lat)
    if b is not None:
        assert a is not None and b >= a - 1e-12


@given(st.floats(6.0, 14.0), st.integers(1, 30))
@settings(max_examples=30, deadline=None)
def test_later_window_start_never_earlier(v0, shift):
    first = unconstrained_trajectory(CavState(1, 0.0, 12.0, 0.0), 100.0 / 12.0, L)
    s = CavState(2, 0.0, v0, 0.5)
    w = exit_time_window(s, LIM, L)
    lat = [LateralConflict(first, 55.0, 45.0)]
    a = schedule_exit_time(s, w, L, LIM, SAFE, SOLVER, lateral=lat)
    later = ExitTimeWindow(w.t_lo + shift * SOLVER.dt, w.t_hi)
    b = schedule_exit_time(s, later, L, LIM, SAFE, SOLVER, lateral=lat)
    if a is not None and b is not None:
        assert b >= a - 1e-12


def _zone():
    return ControlZoneSpec(2, L, (ConflictPoint(10, 20, 70.0, 70.0),))


def _coord(unc=UncertaintyBounds()):
    return Coordinator(_zone(), CoordinationConfig(LIM, SAFE, unc, SOLVER))


def test_coordinator_fifo_conflict_headway():
    c = _coord()
    a = c.request(1, 10, None, 0.0, 12.0)
    b = c.request(2, 20, None, 0.0, 12.0)
    assert a.reason == "unconstrained" and b.plan is not None
    ta = a.plan.trajectory.time_at_position(70.0)
    tb = b.plan.trajectory.time_at_position(70.0)
    assert tb - ta >= 1.5 - 1e-9


def test_coordinator_gap_gate_and_release():
    c = _coord()
    assert c.request(1, 10, None, 0.0, 12.0).plan is not None
    blocked = c.request(2, 10, None, 0.1, 12.0)
    assert blocked.plan is None and blocked.reason == "gap"
    later = c.request(2, 10, None, 2.0, 12.0)
    assert later.plan is not None
    problems = audit_trajectory(later.plan.trajectory, c.limits, c.safety,
                                c.plans[1].trajectory, [], 0.1)
    assert problems == []
    c.release(1000.0)
    assert c.plans == {}


def test_coordinator_uses_tightened_constraints():
    c = _coord(UncertaintyBounds(e_max=0.2, f_max=0.5, g_max=1.0))
    assert c.safety.t_h == pytest.approx(1.9)
    assert c.safety.gamma_s == pytest.approx(2.0 + 0.8 + 1.0)
    adm = c.request(1, 10, None, 0.0, 20.0)
    assert adm.plan.trajectory.speed(0.0) == pytest.approx(14.0)


def test_coordinator_many_crossing_vehicles_are_safe():
    c = _coord()
    plans = []
    for i in range(12):
        approach = 10 if i % 2 == 0 else 20
        t0 = 0.8 * i
        for k in range(400):
            adm = c.request(i, approach, None, t0 + 0.1 * k, 10.0)
            if adm.plan is not None:
                plans.append(adm.plan)
                break
    assert len(plans) == 12
    for i, p in enumerate(plans):
        assert p.trajectory.within_limits(c.limits, 1e-6)
        for q in plans[:i]:
            if q.approach != p.approach:
                dt = abs(p.trajectory.time_at_position(70.0) - q.trajectory.time_at_position(70.0))
                assert dt >= 1.5 - 1e-6
