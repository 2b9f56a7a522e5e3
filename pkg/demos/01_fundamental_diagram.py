"""
Fundamental diagram and time-to-critical prediction
===================================================

A triangular flow-density law per edge, a two-point rate estimate from
sampled densities, and the predicted instant an edge turns critical.
"""

import numpy as np

from cavroute.flowmodel import (EdgeTrafficState, FdParams, RateBounds, fd_flow,
                                fd_speed_and_travel_time, predict_time_to_critical,
                                prediction_error_magnitude, t_c_bounds)

# capacity 0.6 veh/s reached at 40 veh/km, jam at 150 veh/km
fd = FdParams(q_c=0.6, k_c=0.04, k_j=0.15)
print(f"free-flow speed {fd.free_flow_speed:.1f} m/s, wave speed {fd.wave_speed:.2f} m/s")

for k in np.linspace(0.0, fd.k_j, 7):
    v, tt = fd_speed_and_travel_time(fd, k, 400.0)
    print(f"k={1000 * k:6.1f} veh/km  q={fd_flow(fd, k):.3f} veh/s  v={v:5.2f} m/s  "
          f"400 m in {tt:8.1f} s")

# %%
# A density ramp sampled once per second; the rate is taken over 10 s.
state = EdgeTrafficState(edge=1)
for t in range(21):
    state.record(float(t), 0.010 + 0.0005 * t, window=10.0)
pred = predict_time_to_critical(state, fd)
print(f"\nk={state.k:.4f}, r={state.rate:.5f} veh/m/s -> critical in {pred.t_c_remaining:.1f} s")

# %%
# A density error eps moves the prediction by |eps|/|r|; a rate known only
# to lie in an interval brackets the crossing time.
for eps in (0.001, 0.002, 0.005):
    print(f"eps={eps}: crossing shifts by {prediction_error_magnitude(eps, state.rate):.1f} s")
lo, hi = t_c_bounds(state.k, fd.k_c, 20.0, RateBounds(0.0004, 0.0006))
print(f"rate in [4e-4, 6e-4] -> crossing in [{lo:.1f}, {hi:.1f}] s")
