"""Regenerate src/cavroute/scenarios/sioux_falls.json.

Topology is the classic 24-node, 76-link Sioux Falls network. Link lengths
are the usual free-flow time units scaled by ``UNIT_M``. Demand is synthetic:
a handful of long OD flows that cross the network, chosen so that the
central corridor loads up; it is not calibrated against any survey.
"""

import json
from pathlib import Path

UNIT_M = 150.0
ZONE_M = 60.0
FD = {"qc_vps": 0.6, "kc_vpm": 0.04, "kj_vpm": 0.15}
VFF = 15.0

# undirected link: length in units
LINKS = {
    (1, 2): 6, (1, 3): 4, (2, 6): 5, (3, 4): 4, (3, 12): 4, (4, 5): 2, (4, 11): 6,
    (5, 6): 4, (5, 9): 5, (6, 8): 2, (7, 8): 3, (7, 18): 2, (8, 9): 10, (8, 16): 5,
    (9, 10): 3, (10, 11): 5, (10, 15): 6, (10, 16): 4, (10, 17): 8, (11, 12): 6,
    (11, 14): 4, (12, 13): 3, (13, 24): 4, (14, 15): 5, (14, 23): 4, (15, 19): 3,
    (15, 22): 3, (16, 17): 2, (16, 18): 3, (17, 19): 2, (18, 20): 4, (19, 20): 4,
    (20, 21): 6, (20, 22): 5, (21, 22): 2, (21, 24): 3, (22, 23): 4, (23, 24): 2,
}

FLOWS = [(1, 20), (20, 1), (2, 13), (13, 2), (7, 24), (24, 7), (3, 21), (12, 18),
         (18, 12), (10, 24)]


def build() -> dict:
    edges = []
    eid = 1
    for (a, b), units in sorted(LINKS.items()):
        for s, t in ((a, b), (b, a)):
            edges.append({"id": eid, "from": s, "to": t, "length_m": units * UNIT_M,
                          "vff_mps": VFF, "fd": dict(FD)})
            eid += 1
    zones = []
    for node in range(1, 25):
        incoming = sorted(e["id"] for e in edges if e["to"] == node)
        conflicts = []
        for i, a in enumerate(incoming):
            for j in range(i + 1, len(incoming)):
                b = incoming[j]
                # one crossing point per approach pair, spread along each approach
                conflicts.append({"approaches": [a, b],
                                  "distances_m": [ZONE_M * (0.5 + 0.1 * (j % 4)),
                                                  ZONE_M * (0.5 + 0.1 * (i % 4))]})
        zones.append({"node": node, "zone_length_m": ZONE_M, "conflicts": conflicts})
    demand = [{"origin": o, "destination": d, "start_s": 0.0, "end_s": 600.0, "rate_vps": 0.2}
              for o, d in FLOWS]
    return {
        "name": "sioux_falls",
        "nodes": list(range(1, 25)),
        "edges": edges,
        "zones": zones,
        "demand": demand,
        "routing": {"w_base": "free_flow", "T_thres_s": 60.0, "gamma_w": 0.5,
                    "replan_period_s": 10.0, "tc_change_threshold_s": 5.0,
                    "rate_window_s": 10.0},
        "coordination": {"limits": {"u_min": -3.0, "u_max": 2.5, "v_min": 2.0, "v_max": 15.0},
                         "t_h_s": 1.5, "safety": {"gamma_s_m": 2.0, "phi_s": 0.8}},
        "simulation": {"step_s": 0.1, "horizon_s": 2400.0, "sensor_period_s": 1.0, "seed": 0},
    }


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "cavroute" / "scenarios" / "sioux_falls.json"
    doc = build()
    out.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {out}: {len(doc['nodes'])} nodes, {len(doc['edges'])} edges")
