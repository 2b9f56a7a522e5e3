"""Signal-free intersection coordination."""

from .coordinator import (Admission, Coordinator, Plan, SafetyViolation,
                          audit_trajectory)
from .limits import (CoordinationConfig, InfeasibleBounds, SafetyParams, SolverConfig,
                     UncertaintyBounds, VehicleLimits, tightened_constraints)
from .schedule import LateralConflict, feasible_mask, schedule_exit_time
from .trajectory import (CavState, ExitTimeWindow, InfeasibleTrajectory, Trajectory,
                         TrajectorySegment, constrained_fallback, exit_time_window,
                         interior_point_trajectory, project_to_limits,
                         slowest_trajectory, unconstrained_trajectory)

__all__ = [
    "Admission", "CavState", "CoordinationConfig", "Coordinator", "ExitTimeWindow",
    "InfeasibleBounds", "InfeasibleTrajectory", "LateralConflict", "Plan",
    "SafetyParams", "SafetyViolation", "SolverConfig", "Trajectory",
    "TrajectorySegment", "UncertaintyBounds", "VehicleLimits", "audit_trajectory",
    "constrained_fallback", "exit_time_window", "feasible_mask",
    "interior_point_trajectory", "project_to_limits", "schedule_exit_time",
    "slowest_trajectory", "tightened_constraints", "unconstrained_trajectory",
]
