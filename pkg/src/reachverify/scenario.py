"""Scenario ranges, vehicle systems and the per-step control-box rules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .dynamics import DEFAULT_CONSTANTS, DEFAULT_V_GUARD, VehicleConstants
from .errors import ConfigInvalid
from .reach import StepInput
from .sets import IntervalBox

DEG = math.pi / 180.0

VARIABLES = ("xpos", "ypos", "theta", "v", "w", "r", "acc", "deltaf")

# initial-value envelope of the single-vehicle scenario
TABLE4_CENTERS = {
    "xpos": (1.0, 15.0),
    "ypos": (-2.0, 2.0),
    "theta": (-4.0 * DEG, 4.0 * DEG),
    "v": (4.0, 8.0),
    "w": (-0.6, 0.6),
    "r": (-0.1, 0.1),
    "acc": (-3.0, 3.0),
    "deltaf": (-5.0 * DEG, 5.0 * DEG),
}
TABLE4_RADII = {
    "xpos": (0.5, 1.0),
    "ypos": (0.25, 0.5),
    "theta": (0.25 * DEG, 0.5 * DEG),
    "v": (0.25, 0.5),
    "w": (0.05, 0.1),
    "r": (0.01, 0.02),
    "acc": (0.1, 0.2),
    "deltaf": (0.05 * DEG, 0.1 * DEG),
}


def expand_control(u0, delta_plus, delta_minus, lb, ub) -> IntervalBox:
    """[u0 - delta_minus, u0 + delta_plus] clipped to the actuator bounds [lb, ub]."""
    u0 = np.asarray(u0, dtype=float)
    dp = np.asarray(delta_plus, dtype=float)
    dm = np.asarray(delta_minus, dtype=float)
    if np.any(dp < 0) or np.any(dm < 0):
        raise ValueError("control increments must be non-negative")
    lo = np.clip(u0 - dm, lb, ub)
    hi = np.clip(u0 + dp, lb, ub)
    return IntervalBox.from_bounds(lo, hi)


@dataclass
class ScenarioSpec:
    center_ranges: dict = field(default_factory=lambda: dict(TABLE4_CENTERS))
    radius_ranges: dict = field(default_factory=lambda: dict(TABLE4_RADII))
    n_vehicles: int = 1
    n_lanes: int = 1
    lane_width: float = 5.0
    dt: float = 0.2
    N: int = 5
    substeps: int | str = "auto"
    # None: the ego keeps its sampled control box (delta = sampled radius)
    delta_plus: tuple | None = None
    delta_minus: tuple | None = None
    control_lb: tuple = (-3.0, -5.0 * DEG)
    control_ub: tuple = (3.0, 5.0 * DEG)
    # longitudinal center distance of a background vehicle ahead of the ego
    bv_gap_range: tuple = (6.0, 15.0)
    vehicle_length: float = 3.5
    vehicle_width: float = 1.8
    v_guard: float = DEFAULT_V_GUARD
    max_placement_retries: int = 100

    def __post_init__(self):
        self.center_ranges = {k: tuple(map(float, v)) for k, v in self.center_ranges.items()}
        self.radius_ranges = {k: tuple(map(float, v)) for k, v in self.radius_ranges.items()}
        self.control_lb = tuple(map(float, self.control_lb))
        self.control_ub = tuple(map(float, self.control_ub))

    @property
    def road_bounds(self) -> tuple[float, float]:
        half = 0.5 * self.n_lanes * self.lane_width
        return (-half, half)

    def lane_centers(self) -> list[float]:
        lo, _ = self.road_bounds
        return [lo + (i + 0.5) * self.lane_width for i in range(self.n_lanes)]

    def validate(self) -> ScenarioSpec:
        for name in VARIABLES:
            for label, table in (("center", self.center_ranges), ("radius", self.radius_ranges)):
                if name not in table:
                    raise ConfigInvalid(f"{label} range for '{name}' missing")
                lo, hi = table[name]
                if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                    raise ConfigInvalid(f"{label} range for '{name}' is not well-ordered: [{lo}, {hi}]")
                if label == "radius" and lo < 0:
                    raise ConfigInvalid(f"radius range for '{name}' is negative: [{lo}, {hi}]")
        if self.n_vehicles < 1:
            raise ConfigInvalid("n_vehicles must be >= 1")
        if self.n_lanes < 1 or self.lane_width <= 0:
            raise ConfigInvalid("road needs at least one lane of positive width")
        if not self.dt > 0 or self.N < 0:
            raise ConfigInvalid(f"dt must be positive and N non-negative (dt={self.dt}, N={self.N})")
        if any(lo > hi for lo, hi in zip(self.control_lb, self.control_ub)):
            raise ConfigInvalid(f"control bounds not well-ordered: {self.control_lb} / {self.control_ub}")
        lo, hi = self.bv_gap_range
        if not 0 < lo <= hi:
            raise ConfigInvalid(f"bv_gap_range not well-ordered: [{lo}, {hi}]")
        # worst-case braking over the horizon must keep v above the guard
        brake = max(-self.center_ranges["acc"][0] + self.radius_ranges["acc"][1], -self.control_lb[0], 0.0)
        if self.delta_minus is not None:
            brake = max(brake, -self.center_ranges["acc"][0] + self.delta_minus[0])
        v_min = self.center_ranges["v"][0] - self.radius_ranges["v"][1] - brake * self.N * self.dt
        if not v_min > self.v_guard:
            raise ConfigInvalid(
                f"center range for 'v' {self.center_ranges['v']} minus braking over the horizon "
                f"reaches {v_min:.3f} m/s, not above the guard {self.v_guard}")
        return self

    def with_updates(self, **kw) -> ScenarioSpec:
        return replace(self, **kw)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, dict):
                v = {k: list(x) for k, x in v.items()}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioSpec:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigInvalid(f"unknown scenario keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("center_ranges", "radius_ranges"):
            if key in d:
                merged = dict(TABLE4_CENTERS if key == "center_ranges" else TABLE4_RADII)
                merged.update(d[key])
                d[key] = merged
        for key in ("delta_plus", "delta_minus", "control_lb", "control_ub", "bv_gap_range"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class Vehicle:
    state: IntervalBox
    control: IntervalBox
    role: str = "ego"  # "ego" or "background"


@dataclass
class VehicleSystem:
    """Ego (index 0) plus background vehicles sharing one set of constants."""

    vehicles: list
    dt: float = 0.2
    N: int = 5
    substeps: int | str = "auto"
    control_lb: tuple = (-3.0, -5.0 * DEG)
    control_ub: tuple = (3.0, 5.0 * DEG)
    delta_plus: tuple | None = None
    delta_minus: tuple | None = None
    constants: VehicleConstants = DEFAULT_CONSTANTS
    v_guard: float = DEFAULT_V_GUARD

    def __post_init__(self):
        if not self.vehicles:
            raise ValueError("a vehicle system needs at least one vehicle")

    @classmethod
    def from_spec(cls, spec: ScenarioSpec, vehicles, constants=DEFAULT_CONSTANTS) -> VehicleSystem:
        return cls(vehicles, spec.dt, spec.N, spec.substeps, spec.control_lb, spec.control_ub,
                   spec.delta_plus, spec.delta_minus, constants, spec.v_guard)

    def bounds_box(self) -> IntervalBox:
        return IntervalBox.from_bounds(self.control_lb, self.control_ub)

    def control_box(self, i: int, step: int) -> IntervalBox:
        veh = self.vehicles[i]
        if veh.role == "background":
            return self.bounds_box()
        if step == 0:
            return veh.control
        dp = veh.control.radii if self.delta_plus is None else self.delta_plus
        dm = veh.control.radii if self.delta_minus is None else self.delta_minus
        return expand_control(veh.control.centers, dp, dm, self.control_lb, self.control_ub)

    def step_input(self, state: IntervalBox, control: IntervalBox) -> StepInput:
        return StepInput(state, control, self.dt, self.substeps, self.constants, self.v_guard)

    def with_ego_control(self, control: IntervalBox) -> VehicleSystem:
        vehicles = [replace(self.vehicles[0], control=control)] + list(self.vehicles[1:])
        return replace(self, vehicles=vehicles)
