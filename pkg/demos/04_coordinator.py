"""
Intersection coordinator
========================

Vehicles from two crossing approaches request plans in arrival order. The
coordinator keeps rear-end gaps on each approach and the conflict-point
headway across approaches.
"""

from cavroute.coordination import (CoordinationConfig, Coordinator, SafetyParams,
                                   SolverConfig, VehicleLimits)
from cavroute.network import ConflictPoint, ControlZoneSpec

zone = ControlZoneSpec(node=2, zone_length=100.0,
                       conflict_points=(ConflictPoint(10, 20, 70.0, 70.0),))
coord = Coordinator(zone, CoordinationConfig(VehicleLimits(-3.0, 2.5, 2.0, 15.0),
                                             SafetyParams(2.0, 0.8, 1.5),
                                             solver=SolverConfig(w_time=0.5)))

plans = []
for i in range(10):
    approach = 10 if i % 2 == 0 else 20
    t = 0.7 * i
    # a vehicle blocked at the zone entry retries on the next step
    while True:
        adm = coord.request(i, approach, None, t, 12.0)
        if adm.plan is not None:
            break
        t += 0.1
    plans.append(adm.plan)
    tr = adm.plan.trajectory
    print(f"cav {i} approach {approach}: enters {tr.t_start:5.1f} s ({adm.reason:>13}), "
          f"conflict at {tr.time_at_position(70.0):6.2f} s, exits {tr.t_end:6.2f} s")

crossings = sorted((p.trajectory.time_at_position(70.0), p.approach) for p in plans)
gaps = [b[0] - a[0] for a, b in zip(crossings, crossings[1:]) if a[1] != b[1]]
print(f"smallest conflict-point headway between approaches: {min(gaps):.2f} s")
