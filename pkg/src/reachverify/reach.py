"""One-step reachable-set deduction (the oracle side).

Three steppers share the same discrete map: ``substeps`` chained Euler
steps across one deduction interval ``dt`` with the control held fixed.
``substeps=1`` is the plain x + f(x, u) * dt map. With the default
``"auto"`` policy the sub-step length is chosen so that the stiff lateral
modes stay non-oscillatory down to the lowest speed in the box (h * k / v <= 1).

* ``deduce_step_linearized``: zonotope propagation through a linearization
  (midpoint of the interval Jacobian over the current hull) plus a
  mean-value remainder bound. Tight and sound.
* ``deduce_step_interval``: plain interval evaluation. Sound, coarse.
* ``deduce_step_sampled``: hull of sampled successors. An inner bound.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dynamics
from .dynamics import DEFAULT_CONSTANTS, DEFAULT_V_GUARD, N_CONTROL, N_STATE, V, VehicleConstants
from .errors import SpeedBelowGuard, StepError
from .sets import IntervalBox, Zonotope, box_to_zonotope, zonotope_to_box

# outward padding that absorbs floating-point rounding in the enclosures
_PAD_REL = 1e-12
# caps the auto sub-step count at dt * stiffness / 0.25 m/s
_MIN_REF_SPEED = 0.25
# slice width along v, relative to the lowest reachable speed
_V_SLICE_RATIO = 0.5


@dataclass(frozen=True)
class StepInput:
    state_box: IntervalBox
    control_box: IntervalBox
    dt: float = 0.2
    substeps: int | str = "auto"
    constants: VehicleConstants = DEFAULT_CONSTANTS
    v_guard: float = DEFAULT_V_GUARD

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.state_box.dim != N_STATE or self.control_box.dim != N_CONTROL:
            raise ValueError("state box must have 6 dimensions and control box 2")
        v_lb = float(self.state_box.lb[V])
        if not v_lb > self.v_guard:
            raise SpeedBelowGuard(v_lb, self.v_guard)

    def n_substeps(self) -> int:
        if self.substeps != "auto":
            n = int(self.substeps)
            if n < 1:
                raise ValueError(f"substeps must be >= 1, got {n}")
            return n
        # lowest speed the box can reach within the interval
        v_ref = float(self.state_box.lb[V]) + self.dt * min(0.0, float(self.control_box.lb[0]))
        v_ref = max(v_ref, _MIN_REF_SPEED)
        return max(1, math.ceil(self.dt * self.constants.lateral_stiffness / v_ref))

    def with_state(self, state_box: IntervalBox) -> StepInput:
        return StepInput(state_box, self.control_box, self.dt, self.substeps, self.constants, self.v_guard)


@dataclass
class ReachTrace:
    """Per-vehicle sequence of state boxes after each of the N steps."""

    vehicle_id: int
    steps: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    step_times: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)


def _pad(centers, radii) -> IntervalBox:
    radii = np.where(radii > 0, radii + _PAD_REL * (np.abs(centers) + radii), 0.0)
    return IntervalBox(centers, radii)


def _point_successor(inp: StepInput, n_sub: int) -> np.ndarray:
    return dynamics.integrate(inp.state_box.centers, inp.control_box.centers, inp.dt, n_sub,
                              inp.constants, inp.v_guard)


def _linearized_pieces(inp: StepInput) -> int:
    """Number of slices along v so each slice is narrow relative to the lowest speed."""
    v_min = float(inp.state_box.lb[V]) + inp.dt * min(0.0, float(inp.control_box.lb[0]))
    v_min = max(v_min, inp.v_guard)
    return max(1, math.ceil(2.0 * float(inp.state_box.radii[V]) / (_V_SLICE_RATIO * v_min)))


def _propagate(joint: IntervalBox, n_sub: int, h: float, k, guard) -> IntervalBox:
    z = box_to_zonotope(joint)
    z = Zonotope(z.center, z.generators[:, joint.radii > 0])
    M = np.eye(N_STATE + N_CONTROL)
    for _ in range(n_sub):
        hull = zonotope_to_box(z)
        xc, uc = z.center[:N_STATE], z.center[N_STATE:]
        ivs = hull.intervals()
        J = dynamics.jacobian_interval(ivs[:N_STATE], ivs[N_STATE:], k, guard)
        lo = np.array([[e.lb for e in row] for row in J])
        hi = np.array([[e.ub for e in row] for row in J])
        # Mean-value form: f(x) - f(c) = J(xi)(x - c) with J(xi) in [lo, hi].
        # Linear part uses the midpoint matrix, the rest is bounded by its radius.
        Jm = 0.5 * (lo + hi)
        rem = h * (np.maximum(hi - Jm, Jm - lo) @ hull.radii)
        M[:N_STATE, :] = h * Jm
        M[:N_STATE, :N_STATE] += np.eye(N_STATE)
        center = z.center.copy()
        center[:N_STATE] = xc + h * dynamics.derivative(xc, uc, k, guard)
        gens = M @ z.generators
        nz = rem > 0
        if np.any(nz):
            extra = np.zeros((N_STATE + N_CONTROL, int(nz.sum())))
            extra[np.flatnonzero(nz), np.arange(int(nz.sum()))] = rem[nz]
            gens = np.hstack([gens, extra])
        z = Zonotope(center, gens)
    return zonotope_to_box(z)


def deduce_step_linearized(inp: StepInput) -> IntervalBox:
    """Box enclosing every successor of the state and control boxes."""
    n_sub = inp.n_substeps()
    h = inp.dt / n_sub
    joint = inp.state_box.concat(inp.control_box)
    if not np.any(joint.radii > 0):
        return IntervalBox(_point_successor(inp, n_sub), np.zeros(N_STATE))
    pieces = _linearized_pieces(inp)
    if pieces == 1:
        out = _propagate(joint, n_sub, h, inp.constants, inp.v_guard)
    else:
        # the 1/v terms make the remainder grow with the v-width; slice along v
        edges = np.linspace(joint.lb[V], joint.ub[V], pieces + 1)
        out = None
        for lo, hi in zip(edges[:-1], edges[1:]):
            c, r = joint.centers.copy(), joint.radii.copy()
            c[V], r[V] = 0.5 * (lo + hi), 0.5 * (hi - lo)
            part = _propagate(IntervalBox(c, r), n_sub, h, inp.constants, inp.v_guard)
            out = part if out is None else out.hull(part)
    return _pad(out.centers[:N_STATE], out.radii[:N_STATE])


def deduce_step_interval(inp: StepInput) -> IntervalBox:
    """x + h * F(X) with F the interval extension of the derivative, per sub-step."""
    n_sub = inp.n_substeps()
    h = inp.dt / n_sub
    if not np.any(inp.state_box.radii > 0) and not np.any(inp.control_box.radii > 0):
        return IntervalBox(_point_successor(inp, n_sub), np.zeros(N_STATE))
    xs = inp.state_box.intervals()
    us = inp.control_box.intervals()
    for _ in range(n_sub):
        f = dynamics.derivative_interval(xs, us, inp.constants, inp.v_guard)
        xs = [x + fi * h for x, fi in zip(xs, f)]
    box = IntervalBox.from_intervals(xs)
    return _pad(box.centers, box.radii)


def sample_successors(inp: StepInput, n: int, seed) -> np.ndarray:
    """Successor states of n uniform samples from the joint (state, control) box."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    joint = inp.state_box.concat(inp.control_box)
    pts = joint.centers + joint.radii * rng.uniform(-1.0, 1.0, size=(n, N_STATE + N_CONTROL))
    return dynamics.integrate(pts[:, :N_STATE], pts[:, N_STATE:], inp.dt, inp.n_substeps(),
                              inp.constants, inp.v_guard)


def deduce_step_sampled(inp: StepInput, n: int = 1000, seed=0) -> IntervalBox:
    succ = sample_successors(inp, n, seed)
    return IntervalBox.from_bounds(succ.min(axis=0), succ.max(axis=0))


Stepper = Callable[[StepInput], IntervalBox]

STEPPERS: dict[str, Stepper] = {
    "linearized": deduce_step_linearized,
    "interval": deduce_step_interval,
    "sampled": deduce_step_sampled,
}


def deduce_trajectory(system, stepper: Stepper, N: int | None = None) -> list[ReachTrace]:
    """Roll ``stepper`` over N steps for every vehicle of ``system``.

    Control boxes follow the system's controller rules: the ego box is the
    initial box at step 0 and the expanded box afterwards, background boxes
    span the full actuator bounds.
    """
    N = system.N if N is None else N
    traces = [ReachTrace(i) for i in range(len(system.vehicles))]
    states = [veh.state for veh in system.vehicles]
    for step in range(N):
        for i, trace in enumerate(traces):
            ctrl = system.control_box(i, step)
            t0 = time.perf_counter()
            try:
                inp = system.step_input(states[i], ctrl)
                nxt = stepper(inp)
            except Exception as exc:  # noqa: BLE001 - re-raised with context
                raise StepError(step, i, exc) from exc
            trace.step_times.append(time.perf_counter() - t0)
            trace.steps.append(nxt)
            trace.controls.append(ctrl)
            states[i] = nxt
    return traces
