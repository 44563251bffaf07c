import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reachverify import dynamics
from reachverify.dynamics import VehicleConstants
from reachverify.errors import SpeedBelowGuard

K = VehicleConstants()


def reference_derivative(x, u, m=1500.0, Iz=2800.0, a=1.2, b=1.4, Caf=1.7e5, Car=1.3e5):
    """The bicycle equations written out term by term, independent of the package."""
    _, _, th, v, w, r = x
    acc, df = u
    return np.array([
        v * math.cos(th) + w * math.sin(th),
        -w * math.cos(th) + v * math.sin(th),
        r,
        acc,
        -(Caf + Car) / (m * v) * w - ((b * Car - a * Caf) / (m * v) - v) * r + Caf / m * df,
        -(b * Car - a * Caf) / (Iz * v) * w - (a * a * Caf + b * b * Car) / (Iz * v) * r + a * Caf / Iz * df,
    ])


def test_table2_defaults():
    assert (K.m, K.I_z, K.a, K.b, K.C_af, K.C_ar) == (1500, 2800, 1.2, 1.4, 1.7e5, 1.3e5)


def test_straight_acceleration():
    np.testing.assert_allclose(dynamics.derivative([0, 0, 0, 5, 0, 0], [1, 0]), [5, 0, 0, 1, 0, 0])


def test_steering_input():
    d = dynamics.derivative([0, 0, 0, 5, 0, 0], [0, 0.01])
    # hand substitution: C_af/m * 0.01 and a*C_af/I_z * 0.01
    assert d[4] == pytest.approx(170000 / 1500 * 0.01, abs=1e-12)
    assert d[5] == pytest.approx(1.2 * 170000 / 2800 * 0.01, abs=1e-12)
    assert d[4] == pytest.approx(1.13333, abs=1e-5)
    assert d[5] == pytest.approx(0.72857, abs=1e-5)
    np.testing.assert_allclose(d[:4], [5, 0, 0, 0])


def test_heading_north():
    x, u = [0, 0, math.pi / 2, 5, 1, 0.1], [0, 0]
    d = dynamics.derivative(x, u)
    np.testing.assert_allclose(d[:4], [1, 5, 0.1, 0], atol=1e-12)
    np.testing.assert_allclose(d, reference_derivative(x, u), rtol=1e-12, atol=1e-12)
    # hand values of the lateral rows
    assert d[4] == pytest.approx(-39.206667, abs=1e-6)
    assert d[5] == pytest.approx(-1.997143, abs=1e-6)


def test_speed_guard():
    with pytest.raises(SpeedBelowGuard):
        dynamics.derivative([0, 0, 0, 0.1, 0, 0], [0, 0])
    with pytest.raises(SpeedBelowGuard):
        dynamics.jacobian([0, 0, 0, 0.05, 0, 0], [0, 0])
    with pytest.raises(SpeedBelowGuard):
        dynamics.euler_step([0, 0, 0, -1, 0, 0], [0, 0], 0.2)


def test_euler_step_examples():
    np.testing.assert_allclose(dynamics.euler_step([0, 0, 0, 5, 0, 0], [1, 0], 0.2), [1, 0, 0, 5.2, 0, 0])
    x = np.array([1.0, 2.0, 0.1, 5.0, 0.2, 0.01])
    np.testing.assert_array_equal(dynamics.euler_step(x, [0.5, 0.01], 0.0), x)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.5, 10), st.floats(-1, 1), st.floats(-0.3, 0.3),
       st.floats(-3, 3), st.floats(-0.1, 0.1), st.floats(0.01, 0.5))
def test_euler_step_is_scaled_derivative(th, v, w, r, acc, df, dt):
    x = np.array([3.0, -1.0, th, v, w, r])
    u = np.array([acc, df])
    np.testing.assert_allclose(dynamics.euler_step(x, u, dt), x + dt * reference_derivative(x, u),
                               rtol=1e-12, atol=1e-12)


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(100):
        x = np.array([rng.uniform(0, 20), rng.uniform(-3, 3), rng.uniform(-0.3, 0.3),
                      rng.uniform(2, 10), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2)])
        u = np.array([rng.uniform(-3, 3), rng.uniform(-0.1, 0.1)])
        A, B = dynamics.jacobian(x, u)
        z = np.concatenate([x, u])
        fd = np.empty((6, 8))
        for j in range(8):
            e = np.zeros(8)
            e[j] = h
            fp, fm = reference_derivative((z + e)[:6], (z + e)[6:]), reference_derivative((z - e)[:6], (z - e)[6:])
            fd[:, j] = (fp - fm) / (2 * h)
        J = np.hstack([A, B])
        scale = np.maximum(np.abs(fd), 1.0)
        assert np.all(np.abs(J - fd) <= 1e-4 * scale)


def test_jacobian_linear_rows():
    A, B = dynamics.jacobian([0, 0, 0, 5, 0, 0], [0, 0])
    assert B[dynamics.V, dynamics.ACC] == 1.0
    assert A[dynamics.THETA, dynamics.R] == 1.0
    assert A[dynamics.XPOS, dynamics.V] == 1.0


def test_interval_jacobian_encloses_point_jacobians():
    from reachverify.sets import IntervalBox
    rng = np.random.default_rng(1)
    box = IntervalBox([5, 1, 0.05, 6, 0.2, 0.05, 1, 0.02], [1, 0.5, 0.02, 0.5, 0.1, 0.02, 0.2, 0.002])
    ivs = box.intervals()
    J = dynamics.jacobian_interval(ivs[:6], ivs[6:])
    lo = np.array([[e.lb for e in row] for row in J])
    hi = np.array([[e.ub for e in row] for row in J])
    for p in box.sample(2000, rng):
        A, B = dynamics.jacobian(p[:6], p[6:])
        Jp = np.hstack([A, B])
        assert np.all(lo - 1e-12 <= Jp) and np.all(Jp <= hi + 1e-12)


def test_straight_line_stays_on_axis():
    x = np.array([0.0, 0.0, 0.0, 6.0, 0.0, 0.0])
    for _ in range(50):
        x = dynamics.euler_step(x, [0.0, 0.0], 0.2)
        assert x[1] == 0 and x[2] == 0 and x[4] == 0 and x[5] == 0
    assert x[0] == pytest.approx(60.0)


def test_translation_invariance():
    x0 = np.array([0.0, 0.0, 0.03, 6.0, 0.1, 0.02])
    shift = np.array([7.5, -1.25, 0, 0, 0, 0])
    a, b = x0.copy(), x0 + shift
    for _ in range(20):
        a = dynamics.integrate(a, [0.5, 0.01], 0.2, 10)
        b = dynamics.integrate(b, [0.5, 0.01], 0.2, 10)
    np.testing.assert_allclose(b - a, shift, atol=1e-9)


def test_no_nonfinite_on_valid_inputs():
    rng = np.random.default_rng(2)
    n = 100_000
    x = np.column_stack([rng.uniform(-100, 100, n), rng.uniform(-10, 10, n), rng.uniform(-np.pi, np.pi, n),
                         rng.uniform(0.11, 40, n), rng.uniform(-5, 5, n), rng.uniform(-2, 2, n)])
    u = np.column_stack([rng.uniform(-3, 3, n), rng.uniform(-0.1, 0.1, n)])
    assert np.all(np.isfinite(dynamics.derivative(x, u)))


def test_constants_must_be_positive():
    with pytest.raises(ValueError):
        VehicleConstants(m=0)
