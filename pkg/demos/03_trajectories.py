"""
Minimum-energy crossings through a control zone
===============================================

Exit-time window, the earliest feasible exit on the scheduling grid, the
closed-form minimum-energy profile, and the piecewise fallback used when a
conflict-point crossing time is imposed.
"""

import numpy as np

from cavroute.coordination import (CavState, LateralConflict, SafetyParams, SolverConfig,
                                   VehicleLimits, constrained_fallback, exit_time_window,
                                   schedule_exit_time, unconstrained_trajectory)

L = 100.0
lim = VehicleLimits(u_min=-3.0, u_max=2.5, v_min=2.0, v_max=15.0)
safety = SafetyParams(gamma_s=2.0, phi=0.8, t_h=1.5)
solver = SolverConfig(w_time=0.5, dt=0.1, sample_step=0.1)

first = CavState(1, 0.0, 10.0, 0.0)
w = exit_time_window(first, lim, L)
print(f"exit window for cav 1: [{w.t_lo:.2f}, {w.t_hi:.2f}] s")
tf1 = schedule_exit_time(first, w, L, lim, safety, solver)
tr1 = unconstrained_trajectory(first, tf1, L)
print(f"cav 1 exits at {tf1:.2f} s, energy {tr1.energy():.3f}, "
      f"crosses 60 m at {tr1.time_at_position(60.0):.2f} s")

# %%
# A crossing vehicle shares a conflict point 60 m into both approaches and
# must pass it at least t_h later.
second = CavState(2, 0.0, 10.0, 0.0)
tf2 = schedule_exit_time(second, exit_time_window(second, lim, L), L, lim, safety, solver,
                         lateral=[LateralConflict(tr1, 60.0, 60.0)])
tr2 = unconstrained_trajectory(second, tf2, L)
print(f"cav 2 exits at {tf2:.2f} s, crosses 60 m at {tr2.time_at_position(60.0):.2f} s")
for t in np.linspace(0.0, tf2, 6):
    print(f"  t={t:5.2f}  p={float(tr2.position(t)):6.2f}  v={float(tr2.speed(t)):5.2f}  "
          f"u={float(tr2.control(t)):+.3f}")

# %%
# When the exit grid gives nothing, the coordinator imposes the crossing
# instant directly; the control is linear on each side of it.
fb = constrained_fallback(CavState(3, 0.0, 10.0, 0.0), [(60.0, 7.5)], lim, solver, L)
print(f"\nfallback ({fb.kind}): exit {fb.t_end:.2f} s at {fb.v_end:.2f} m/s, "
      f"p(7.5)={float(fb.position(7.5)):.3f} m")
for slope, intercept in fb.control_coefficients():
    print(f"  branch u(t) = {slope:+.4f} t {intercept:+.4f}")
