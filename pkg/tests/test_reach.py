import numpy as np
import pytest

from reachverify import dynamics, reach
from reachverify.errors import SpeedBelowGuard, StepError
from reachverify.reach import StepInput, deduce_step_interval, deduce_step_linearized, deduce_step_sampled
from reachverify.scenario import ScenarioSpec, Vehicle, VehicleSystem
from reachverify.sets import IntervalBox

from .helpers import random_step_input

EXAMPLE = StepInput(IntervalBox([0, 0, 0, 5, 0, 0], [0.5, 0.25, 0.005, 0.3, 0.05, 0.01]),
                    IntervalBox([1, 0], [0.1, 0.001]), dt=0.2)


def point_input(substeps="auto"):
    return StepInput(IntervalBox([2, 0.5, 0.02, 6, 0.1, 0.01], np.zeros(6)),
                     IntervalBox([0.5, 0.01], [0, 0]), 0.2, substeps)


@pytest.mark.parametrize("stepper", [deduce_step_linearized, deduce_step_interval])
def test_zero_radius_is_point_successor(stepper):
    inp = point_input()
    out = stepper(inp)
    assert not np.any(out.radii)
    expected = dynamics.integrate(inp.state_box.centers, inp.control_box.centers, 0.2, inp.n_substeps())
    np.testing.assert_array_equal(out.centers, expected)
    single = stepper(point_input(substeps=1))
    np.testing.assert_array_equal(single.centers, dynamics.euler_step(inp.state_box.centers,
                                                                      inp.control_box.centers, 0.2))


def test_auto_substeps_keep_lateral_modes_stable():
    inp = EXAMPLE
    n = inp.n_substeps()
    h = inp.dt / n
    v_min = inp.state_box.lb[3] + inp.dt * inp.control_box.lb[0]
    assert h * dynamics.DEFAULT_CONSTANTS.lateral_stiffness / v_min <= 1.0
    assert StepInput(inp.state_box, inp.control_box, 0.2, 1).n_substeps() == 1


@pytest.mark.parametrize("substeps", ["auto", 1, 4])
def test_example_contains_sampled_hull(substeps):
    inp = StepInput(EXAMPLE.state_box, EXAMPLE.control_box, 0.2, substeps)
    hull = deduce_step_sampled(inp, 100_000, seed=3)
    assert deduce_step_linearized(inp).contains_box(hull)
    assert deduce_step_interval(inp).contains_box(hull)


def test_doubling_radii_never_shrinks_output():
    rng = np.random.default_rng(4)
    for _ in range(30):
        inp = random_step_input(rng)
        big = StepInput(IntervalBox(inp.state_box.centers, 2 * inp.state_box.radii),
                        IntervalBox(inp.control_box.centers, 2 * inp.control_box.radii))
        if not big.state_box.lb[3] > big.v_guard:
            continue
        assert np.all(deduce_step_linearized(big).radii >= deduce_step_linearized(inp).radii)


def test_interval_width_dominates_sampled():
    rng = np.random.default_rng(5)
    for i in range(20):
        inp = random_step_input(rng)
        hull = deduce_step_sampled(inp, 10_000, seed=i)
        out = deduce_step_interval(inp)
        assert out.contains_box(hull)
        assert np.all(out.radii >= hull.radii)


def test_sampled_edge_cases():
    assert not np.any(deduce_step_sampled(point_input(), 50, seed=0).radii)
    assert not np.any(deduce_step_sampled(EXAMPLE, 1, seed=0).radii)
    with pytest.raises(ValueError):
        deduce_step_sampled(EXAMPLE, 0)


def test_sampled_hull_grows_with_nested_samples():
    small = deduce_step_sampled(EXAMPLE, 500, seed=11)
    large = deduce_step_sampled(EXAMPLE, 1000, seed=11)
    assert large.contains_box(small)
    pts = reach.sample_successors(EXAMPLE, 1000, seed=11)
    np.testing.assert_array_equal(pts[:500], reach.sample_successors(EXAMPLE, 500, seed=11))


def test_soundness_on_random_inputs():
    rng = np.random.default_rng(6)
    for i in range(100):
        inp = random_step_input(rng)
        pts = reach.sample_successors(inp, 10_000, seed=i)
        assert np.all(deduce_step_linearized(inp).contains(pts))
        assert np.all(deduce_step_interval(inp).contains(pts))


def test_linearized_tighter_than_interval():
    rng = np.random.default_rng(7)
    n, tighter = 200, np.zeros(6)
    for _ in range(n):
        inp = random_step_input(rng)
        tighter += deduce_step_linearized(inp).radii <= deduce_step_interval(inp).radii + 1e-9
    assert np.all(tighter >= 0.95 * n)


def test_determinism():
    a = deduce_step_linearized(EXAMPLE)
    b = deduce_step_linearized(EXAMPLE)
    assert a == b
    assert deduce_step_sampled(EXAMPLE, 100, seed=9) == deduce_step_sampled(EXAMPLE, 100, seed=9)


def test_step_input_guards_speed():
    with pytest.raises(SpeedBelowGuard):
        StepInput(IntervalBox([0, 0, 0, 0.3, 0, 0], [0, 0, 0, 0.25, 0, 0]), IntervalBox([0, 0], [0, 0]))


def straight_system(N=5):
    ego = Vehicle(IntervalBox([0, 0, 0, 6, 0, 0], [0.5, 0.25, 0.005, 0.3, 0.05, 0.01]),
                  IntervalBox([0.5, 0], [0.1, 0.001]))
    return VehicleSystem([ego], N=N)


def test_trajectory_lengths_and_symmetry():
    assert reach.deduce_trajectory(straight_system(), deduce_step_linearized, 0)[0].steps == []
    (trace,) = reach.deduce_trajectory(straight_system(), deduce_step_linearized)
    assert len(trace) == 5 and len(trace.step_times) == 5
    for box in trace.steps:
        assert box.centers[1] == 0.0


def test_trajectory_feedback_reproduces_next_step():
    system = straight_system()
    (trace,) = reach.deduce_trajectory(system, deduce_step_linearized)
    for k in range(4):
        inp = system.step_input(trace.steps[k], system.control_box(0, k + 1))
        assert deduce_step_linearized(inp) == trace.steps[k + 1]


def test_trajectory_error_carries_step_index():
    ego = Vehicle(IntervalBox([0, 0, 0, 1.0, 0, 0], [0.1, 0.1, 0, 0.1, 0, 0]), IntervalBox([-3, 0], [0, 0]))
    system = VehicleSystem([ego], N=5)
    with pytest.raises(StepError) as err:
        reach.deduce_trajectory(system, deduce_step_linearized)
    assert err.value.step >= 1
    assert isinstance(err.value.cause, SpeedBelowGuard)


def test_background_vehicle_uses_full_bounds():
    spec = ScenarioSpec()
    ego = Vehicle(IntervalBox([0, 0, 0, 6, 0, 0], np.full(6, 0.01)), IntervalBox([1, 0], [0.1, 0.001]))
    bv = Vehicle(IntervalBox([20, 0, 0, 6, 0, 0], np.full(6, 0.01)), IntervalBox([0, 0], [3, 0.0873]),
                 "background")
    system = VehicleSystem.from_spec(spec, [ego, bv])
    traces = reach.deduce_trajectory(system, deduce_step_linearized, 2)
    for box in traces[1].controls:
        np.testing.assert_allclose(box.lb, spec.control_lb)
        np.testing.assert_allclose(box.ub, spec.control_ub)
    assert traces[0].controls[0] == ego.control
