"""Triangular fundamental diagram and time-to-critical-density prediction.

Units throughout: density in veh/m, flow in veh/s, speed in m/s, time in s.
A positive rate means density is increasing.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Optional, Sequence, Tuple

# Travel time on a jammed edge. Deliberately infinite, never produced by
# dividing by a zero speed.
INFINITE_TIME = math.inf


@dataclass(frozen=True)
class FdParams:
    """Triangular fundamental diagram of one edge."""

    q_c: float  # capacity flow, veh/s
    k_c: float  # critical density, veh/m
    k_j: float  # jam density, veh/m

    def __post_init__(self):
        if not self.q_c > 0:
            raise ValueError(f"capacity flow must be positive, got {self.q_c}")
        if not 0 < self.k_c < self.k_j:
            raise ValueError(
                f"need 0 < k_c < k_j, got k_c={self.k_c}, k_j={self.k_j}")

    @property
    def free_flow_speed(self) -> float:
        return self.q_c / self.k_c

    @property
    def wave_speed(self) -> float:
        """Magnitude of the congested-branch slope (m/s)."""
        return self.q_c / (self.k_j - self.k_c)


def _check_density(fd: FdParams, k: float) -> None:
    if not 0.0 <= k <= fd.k_j:
        raise ValueError(f"density {k} outside [0, {fd.k_j}]")


def fd_flow(fd: FdParams, k: float) -> float:
    """Flow at density ``k``: linear up to ``k_c``, linear back to zero at ``k_j``."""
    _check_density(fd, k)
    if k <= fd.k_c:
        return fd.q_c * k / fd.k_c
    return fd.q_c * (1.0 - (k - fd.k_c) / (fd.k_j - fd.k_c))


def fd_speed_and_travel_time(fd: FdParams, k: float, length: float) -> Tuple[float, float]:
    """Mean speed from ``q = k v`` and the resulting travel time over ``length``.

    At zero density the free-flow speed is returned; at jam density the speed
    is zero and the travel time is ``INFINITE_TIME``.
    """
    _check_density(fd, k)
    if k <= fd.k_c:
        # left branch: q/k is constant, avoid 0/0 at k = 0
        speed = fd.free_flow_speed
    else:
        speed = fd_flow(fd, k) / k
    if speed <= 0.0:
        return 0.0, INFINITE_TIME
    return speed, length / speed


@dataclass
class EdgeTrafficState:
    """Measured density history of one edge.

    ``history`` keeps ``(t, k)`` samples with strictly increasing times; the
    oldest samples fall off once ``maxlen`` is reached.
    """

    edge: int
    k: float = 0.0
    r: Optional[float] = None
    maxlen: int = 256
    history: Deque[Tuple[float, float]] = field(default_factory=deque)

    def __post_init__(self):
        self.history = deque(self.history, maxlen=self.maxlen)

    def record(self, t: float, k: float, window: Optional[float] = None) -> None:
        if self.history and t <= self.history[-1][0]:
            raise ValueError(
                f"edge {self.edge}: sample time {t} not after {self.history[-1][0]}")
        if k < 0:
            raise ValueError(f"edge {self.edge}: negative density {k}")
        self.history.append((t, k))
        self.k = k
        if window is not None:
            self.r = estimate_rate(self.history, window)

    @property
    def rate(self) -> float:
        """Latest rate estimate, 0 when none is available yet."""
        return 0.0 if self.r is None else self.r


def estimate_rate(history: Sequence[Tuple[float, float]], window: float) -> Optional[float]:
    """Two-point rate of density change over the last ``window`` seconds.

    Uses the newest sample and the newest sample that is at least ``window``
    older. Returns None when the history does not span the window yet.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if len(history) < 2:
        return None
    t1, k1 = history[-1]
    # walk back; histories are short (bounded deque)
    for i in range(len(history) - 2, -1, -1):
        t0, k0 = history[i]
        # small slack so a sample exactly one window back is accepted despite rounding
        if t1 - t0 >= window - 1e-9 * max(1.0, abs(t1)):
            return (k1 - k0) / (t1 - t0)
    return None


@dataclass(frozen=True)
class RatePrediction:
    t_c_remaining: float  # s until critical density, may be inf
    r_used: float
    k_at_prediction: float

    def absolute(self, now: float) -> float:
        return now + self.t_c_remaining


def time_to_critical(k0: float, k_c: float, r: float, t0: float = 0.0) -> float:
    """Linear extrapolation ``t0 + (k_c - k0)/r``; no clamping, ``r`` must be nonzero."""
    if r == 0:
        raise ZeroDivisionError("rate of density change is zero")
    return t0 + (k_c - k0) / r


def predict_time_to_critical(state: EdgeTrafficState, fd: FdParams) -> RatePrediction:
    """Remaining time until the edge reaches critical density.

    Zero if the edge is already at or above ``k_c``; infinite if density is
    not increasing.
    """
    k = state.k
    r = state.rate
    if k >= fd.k_c:
        remaining = 0.0
    elif r <= 0.0:
        remaining = math.inf
    else:
        remaining = time_to_critical(k, fd.k_c, r)
    return RatePrediction(remaining, r, k)


def prediction_error_magnitude(epsilon: float, r: float) -> float:
    """Magnitude of the crossing-time error caused by a density error ``epsilon``."""
    if r == 0:
        raise ValueError("prediction error undefined for zero rate")
    return abs(epsilon) / abs(r)


@dataclass(frozen=True)
class RateBounds:
    r_min: float
    r_max: float

    def __post_init__(self):
        if self.r_min > self.r_max:
            raise ValueError(f"r_min={self.r_min} exceeds r_max={self.r_max}")


def t_c_bounds(k0: float, k_c: float, t0: float, bounds: RateBounds) -> Tuple[float, float]:
    """Interval containing the critical-density crossing time for any constant
    rate in ``bounds``. A nonpositive ``r_min`` leaves the upper end unbounded."""
    if not k0 < k_c:
        raise ValueError(f"need k0 < k_c, got {k0} >= {k_c}")
    gap = k_c - k0
    hi = t0 + gap / bounds.r_min if bounds.r_min > 0 else math.inf
    lo = t0 + gap / bounds.r_max if bounds.r_max > 0 else math.inf
    return lo, hi
