import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavroute.flowmodel import (INFINITE_TIME, EdgeTrafficState, FdParams, RateBounds,
                                estimate_rate, fd_flow, fd_speed_and_travel_time,
                                predict_time_to_critical, prediction_error_magnitude,
                                t_c_bounds, time_to_critical)

FD = FdParams(q_c=0.5, k_c=0.03, k_j=0.15)


def test_fd_endpoints():
    assert fd_flow(FD, 0.0) == 0.0
    assert fd_flow(FD, FD.k_c) == pytest.approx(FD.q_c, abs=1e-15)
    assert fd_flow(FD, FD.k_j) == 0.0


def test_fd_congested_branch_hand_value():
    # 0.5 * (1 - (0.09 - 0.03) / (0.15 - 0.03))
    assert fd_flow(FD, 0.09) == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("k", [-1e-6, 0.15 + 1e-6])
def test_fd_rejects_out_of_range(k):
    with pytest.raises(ValueError):
        fd_flow(FD, k)


@pytest.mark.parametrize("q_c,k_c,k_j", [(0.5, 0.15, 0.15), (0.5, 0.2, 0.15), (0, 0.03, 0.15),
                                         (0.5, 0.0, 0.15)])
def test_fd_params_validation(q_c, k_c, k_j):
    with pytest.raises(ValueError):
        FdParams(q_c, k_c, k_j)


def test_speed_free_flow_limit():
    v, tt = fd_speed_and_travel_time(FD, 0.0, 300.0)
    assert v == pytest.approx(FD.q_c / FD.k_c)
    assert tt == pytest.approx(300.0 * FD.k_c / FD.q_c)


def test_speed_constant_on_free_branch():
    ks = np.linspace(1e-4, FD.k_c, 10)
    speeds = [fd_speed_and_travel_time(FD, k, 100.0)[0] for k in ks]
    assert np.allclose(speeds, FD.q_c / FD.k_c, rtol=0, atol=1e-12)


def test_jam_gives_infinite_time_sentinel():
    v, tt = fd_speed_and_travel_time(FD, FD.k_j, 100.0)
    assert v == 0.0
    assert tt is INFINITE_TIME


def test_speed_decreasing_on_congested_branch():
    ks = np.linspace(FD.k_c, FD.k_j * 0.999, 50)
    speeds = np.array([fd_speed_and_travel_time(FD, k, 1.0)[0] for k in ks])
    assert np.all(np.diff(speeds) < 0)


def test_rate_from_two_samples():
    st_ = EdgeTrafficState(1)
    st_.record(0.0, 0.020)
    st_.record(10.0, 0.022, window=10.0)
    assert st_.rate == pytest.approx(2.0e-4, rel=1e-12)


def test_rate_constant_history_is_zero():
    hist = [(float(t), 0.05) for t in range(12)]
    assert estimate_rate(hist, 10.0) == 0.0


def test_rate_sign_when_decreasing():
    hist = [(float(t), 0.05 - 0.001 * t) for t in range(12)]
    assert estimate_rate(hist, 10.0) < 0


def test_rate_unavailable_before_window_filled():
    s = EdgeTrafficState(1)
    s.record(0.0, 0.01, window=10.0)
    s.record(5.0, 0.02, window=10.0)
    assert s.r is None and s.rate == 0.0


def test_record_requires_increasing_time():
    s = EdgeTrafficState(1)
    s.record(1.0, 0.01)
    with pytest.raises(ValueError):
        s.record(1.0, 0.02)


def test_time_to_critical_hand_value():
    s = EdgeTrafficState(1, k=0.020, r=0.002)
    fd = FdParams(0.6, 0.030, 0.15)
    assert predict_time_to_critical(s, fd).t_c_remaining == pytest.approx(5.0, rel=1e-12)


def test_time_to_critical_edge_cases():
    fd = FdParams(0.6, 0.030, 0.15)
    assert predict_time_to_critical(EdgeTrafficState(1, k=0.02, r=0.0), fd).t_c_remaining == math.inf
    assert predict_time_to_critical(EdgeTrafficState(1, k=0.02, r=-1e-3), fd).t_c_remaining == math.inf
    assert predict_time_to_critical(EdgeTrafficState(1, k=0.03, r=1e-3), fd).t_c_remaining == 0.0
    assert predict_time_to_critical(EdgeTrafficState(1, k=0.05, r=-1e-3), fd).t_c_remaining == 0.0
    with pytest.raises(ZeroDivisionError):
        time_to_critical(0.02, 0.03, 0.0)


def test_prediction_error_values():
    assert prediction_error_magnitude(0.0, 0.002) == 0.0
    assert prediction_error_magnitude(0.001, 0.002) == pytest.approx(0.5)
    assert prediction_error_magnitude(-0.001, -0.002) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        prediction_error_magnitude(0.001, 0.0)


def test_t_c_bounds_hand_value():
    lo, hi = t_c_bounds(0.02, 0.03, 0.0, RateBounds(0.001, 0.002))
    assert (lo, hi) == (pytest.approx(5.0), pytest.approx(10.0))


def test_t_c_bounds_degenerate_and_invalid():
    lo, hi = t_c_bounds(0.02, 0.03, 3.0, RateBounds(0.002, 0.002))
    assert lo == hi
    assert t_c_bounds(0.02, 0.03, 0.0, RateBounds(0.0, 0.002))[1] == math.inf
    with pytest.raises(ValueError):
        t_c_bounds(0.03, 0.03, 0.0, RateBounds(0.001, 0.002))
    with pytest.raises(ValueError):
        RateBounds(0.002, 0.001)


fd_params = st.builds(
    lambda kc, ratio, qc: FdParams(qc, kc, kc * ratio),
    st.floats(0.005, 0.1), st.floats(1.2, 10.0), st.floats(0.05, 2.0))


@given(fd_params, st.floats(0.0, 1.0))
def test_flow_bounded_by_capacity(fd, frac):
    q = fd_flow(fd, frac * fd.k_j)
    assert 0.0 <= q <= fd.q_c * (1 + 1e-12)


@given(fd_params, st.floats(1e-4, 0.9999))
def test_speed_times_density_is_flow(fd, frac):
    k = frac * fd.k_j
    v, tt = fd_speed_and_travel_time(fd, k, 250.0)
    assert v * k == pytest.approx(fd_flow(fd, k), rel=1e-9, abs=1e-15)
    assert tt == pytest.approx(250.0 / v, rel=1e-12)


@given(st.floats(0.0, 0.029), st.floats(1e-5, 1e-2), st.floats(-1e-3, 1e-3))
@settings(max_examples=200)
def test_error_law_matches_difference(k0, r, eps):
    diff = abs(time_to_critical(k0 + eps, 0.03, r) - time_to_critical(k0, 0.03, r))
    assert diff == pytest.approx(prediction_error_magnitude(eps, r), rel=1e-7, abs=1e-9)
