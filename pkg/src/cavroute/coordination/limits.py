"""Vehicle limits, safety parameters and their worst-case tightening."""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class VehicleLimits:
    u_min: float  # m/s^2, negative
    u_max: float  # m/s^2, positive
    v_min: float  # m/s, positive
    v_max: float  # m/s

    def __post_init__(self):
        if not self.u_min < 0 < self.u_max:
            raise ValueError(f"need u_min < 0 < u_max, got {self.u_min}, {self.u_max}")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError(f"need 0 < v_min <= v_max, got {self.v_min}, {self.v_max}")

    def with_speed_cap(self, v_cap: float) -> "VehicleLimits":
        """Per-edge speed limit override."""
        return replace(self, v_max=max(self.v_min, min(self.v_max, v_cap)))


@dataclass(frozen=True)
class SafetyParams:
    gamma_s: float = 2.0  # standstill distance, m
    phi: float = 0.8  # reaction time, s
    t_h: float = 1.5  # conflict-point headway, s

    def __post_init__(self):
        if not (self.gamma_s > 0 and self.phi > 0 and self.t_h > 0):
            raise ValueError("gamma_s, phi and t_h must all be positive")

    def gap(self, v):
        """Required rear-end distance at follower speed ``v``."""
        return self.gamma_s + self.phi * v


@dataclass(frozen=True)
class UncertaintyBounds:
    e_max: float = 0.0  # time deviation, s
    f_max: float = 0.0  # position deviation, m
    g_max: float = 0.0  # speed deviation, m/s

    def __post_init__(self):
        if min(self.e_max, self.f_max, self.g_max) < 0:
            raise ValueError("uncertainty bounds must be nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    w_time: float = 0.5  # final-time weight of the constrained fallback
    dt: float = 0.1  # exit-time search increment, s
    sample_step: float = 0.1  # constraint sampling step, s

    def __post_init__(self):
        if not (self.w_time > 0 and self.dt > 0 and self.sample_step > 0):
            raise ValueError("w_time, dt and sample_step must be positive")


@dataclass(frozen=True)
class CoordinationConfig:
    limits: VehicleLimits
    safety: SafetyParams = field(default_factory=SafetyParams)
    uncertainty: UncertaintyBounds = field(default_factory=UncertaintyBounds)
    solver: SolverConfig = field(default_factory=SolverConfig)


class InfeasibleBounds(ValueError):
    pass


def tightened_constraints(safety: SafetyParams, bounds: UncertaintyBounds,
                          limits: VehicleLimits | None = None):
    """Deterministic worst case of the robust constraints.

    Every realization of position deviation within ``f_max`` on both vehicles,
    follower speed deviation within ``g_max`` and crossing-time deviation
    within ``e_max`` on both vehicles is covered by inflating the nominal
    constraints: the standstill distance grows by ``phi*g_max + 2*f_max``, the
    headway by ``2*e_max`` and the speed box shrinks by ``g_max`` on each side.

    Returns ``(safety, limits)``; ``limits`` is None when not given.
    """
    eff = SafetyParams(
        gamma_s=safety.gamma_s + safety.phi * bounds.g_max + 2.0 * bounds.f_max,
        phi=safety.phi,
        t_h=safety.t_h + 2.0 * bounds.e_max,
    )
    if limits is None:
        return eff, None
    lo = limits.v_min + bounds.g_max
    hi = limits.v_max - bounds.g_max
    if lo > hi:
        raise InfeasibleBounds(
            f"speed deviation {bounds.g_max} leaves empty speed box [{lo}, {hi}]")
    return eff, replace(limits, v_min=lo, v_max=hi)
