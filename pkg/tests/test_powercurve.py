import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_ed.powercurve import PowerCurvePWL, pwl_power_curve, turbine_samples


def test_linear_curve_single_piece_exact():
    v = np.linspace(3, 12, 10)
    samples = np.column_stack([v, 10 * (v - 3)])
    c = pwl_power_curve(samples, K=1)
    assert c.pieces == 1
    assert c.max_gap == pytest.approx(0.0, abs=1e-12)
    assert c.evaluate(v) == pytest.approx(samples[:, 1])


def test_turbine_curve_under_approximation():
    s = turbine_samples(50)
    c = pwl_power_curve(s, K=4)
    env = c.available(s[:, 0])
    assert c.pieces <= 4
    assert np.all(env <= s[:, 1] + 1e-9)
    # the stored gap is the worst shortfall on the increasing part, recomputed here
    inc = (s[:, 1] > 0) & (s[:, 1] < c.pwmax)
    assert np.max(s[inc, 1] - env[inc]) <= c.max_gap + 1e-9
    assert c.max_gap < 0.2 * c.pwmax


def test_more_pieces_never_hurt():
    s = turbine_samples(50)
    gaps = [pwl_power_curve(s, K=k).max_gap for k in (1, 2, 3, 4, 6)]
    assert all(a >= b - 1e-12 for a, b in zip(gaps, gaps[1:]))


def test_invalid_inputs():
    s = turbine_samples()
    with pytest.raises(ValueError):
        pwl_power_curve(s, K=0)
    with pytest.raises(ValueError):
        pwl_power_curve(s[::-1], K=2)
    bumpy = np.array([[3, 0], [4, 10], [5, 5], [6, 20], [7, 20]], float)
    with pytest.raises(ValueError, match="monotone"):
        pwl_power_curve(bumpy, K=2, pwmax=20)
    with pytest.raises(ValueError):
        PowerCurvePWL([], [], 10.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 5), min_size=3, max_size=8), st.integers(1, 4))
def test_envelope_is_convex_nondecreasing(increments, K):
    v = np.arange(len(increments) + 1, dtype=float) + 3
    p = np.r_[0.0, np.cumsum(increments)]
    c = pwl_power_curve(np.column_stack([v, p]), K)
    grid = np.linspace(v[0], v[-1], 200)
    y = c.evaluate(grid)
    assert np.all(np.diff(y) >= -1e-9)
    assert np.all(np.diff(y, 2) >= -1e-7)
    assert np.all(c.evaluate(v) <= p + 1e-9)


def test_available_is_capped():
    c = PowerCurvePWL([-30.0], [10.0], 50.0)
    assert c.available(20.0) == 50.0
    assert c.available(1.0) == 0.0
