"""
Sioux Falls showcase
====================

The 24-node, 76-link Sioux Falls network with synthetic demand and a
control zone at every node. Both controllers run to completion; expect a
few minutes of runtime.
"""

import time
from importlib import resources

from cavroute import load_scenario, run
from cavroute.cli import comparison_rows, format_comparison

scenario = load_scenario(resources.files("cavroute") / "scenarios" / "sioux_falls.json")
print(f"{len(scenario.graph.nodes)} nodes, {len(scenario.graph.edges)} links, "
      f"{len(scenario.demand)} vehicles")
summaries = {}
for controller in ("baseline", "proposed"):
    t0 = time.perf_counter()
    report, _ = run(scenario, controller)
    summaries[controller] = report.summary()
    print(f"{controller}: {time.perf_counter() - t0:.0f} s wall clock")

print(format_comparison(comparison_rows(summaries["baseline"], summaries["proposed"])))
