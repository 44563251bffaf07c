"""Scenario sampling, traffic controllers and the oracle-labelled dataset pipeline."""
from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import reach, scope
from .dynamics import DEFAULT_CONSTANTS, VehicleConstants
from .errors import NonPositiveGap, PlacementFailed
from .safety import VehicleShape, polygons_intersect, state_occupancy
from .scenario import (VARIABLES, ScenarioSpec, Vehicle, VehicleSystem,  # noqa: F401 - re-exported
                       expand_control)
from .sets import IntervalBox

log = logging.getLogger(__name__)

BRAKE_SIGNAL = (-3.0, 0.0)


def _draw(rng, ranges: dict) -> np.ndarray:
    lo = np.array([ranges[n][0] for n in VARIABLES])
    hi = np.array([ranges[n][1] for n in VARIABLES])
    return lo + (hi - lo) * rng.uniform(0.0, 1.0, size=len(VARIABLES))


def sample_system(spec: ScenarioSpec, rng, constants: VehicleConstants = DEFAULT_CONSTANTS) -> VehicleSystem:
    """Uniform draw of every variable's center and radius within the spec ranges.

    Background vehicles are placed ahead of the ego (gap drawn from
    ``bv_gap_range``) and redrawn until their initial occupancy is disjoint
    from every vehicle already placed.
    """
    shape = VehicleShape(spec.vehicle_length, spec.vehicle_width)
    c, r = _draw(rng, spec.center_ranges), _draw(rng, spec.radius_ranges)
    ego = Vehicle(IntervalBox(c[:6], r[:6]), IntervalBox(c[6:], r[6:]), "ego")
    vehicles = [ego]
    polys = [state_occupancy(ego.state, shape)]
    bounds = IntervalBox.from_bounds(spec.control_lb, spec.control_ub)
    for _ in range(1, spec.n_vehicles):
        for _attempt in range(spec.max_placement_retries):
            c, r = _draw(rng, spec.center_ranges), _draw(rng, spec.radius_ranges)
            c[0] = ego.state.centers[0] + rng.uniform(*spec.bv_gap_range) + (len(vehicles) - 1) * spec.bv_gap_range[1]
            state = IntervalBox(c[:6], r[:6])
            poly = state_occupancy(state, shape)
            if not any(polygons_intersect(poly, q) for q in polys):
                vehicles.append(Vehicle(state, bounds, "background"))
                polys.append(poly)
                break
        else:
            raise PlacementFailed(
                f"could not place background vehicle {len(vehicles)} after {spec.max_placement_retries} draws")
    return VehicleSystem.from_spec(spec, vehicles, constants)


@dataclass(frozen=True)
class IDMParams:
    v0: float = 8.0
    T: float = 1.5
    s0: float = 2.0
    a_max: float = 3.0
    b_comf: float = 3.0
    delta: float = 4.0


def idm_acceleration(v, v_lead=None, gap=None, params: IDMParams = IDMParams(), bounds=(-3.0, 3.0)) -> float:
    """Intelligent Driver Model acceleration; ``gap`` is bumper to bumper."""
    p = params
    free = 1.0 - (max(v, 0.0) / p.v0) ** p.delta
    interaction = 0.0
    if v_lead is not None:
        if gap is None or not gap > 0:
            raise NonPositiveGap(f"gap to leader must be positive, got {gap}")
        s_star = p.s0 + max(0.0, v * p.T + v * (v - v_lead) / (2.0 * math.sqrt(p.a_max * p.b_comf)))
        interaction = (s_star / gap) ** 2
    a = p.a_max * (free - interaction)
    return float(np.clip(a, bounds[0], bounds[1]))


@dataclass(frozen=True)
class MOBILParams:
    politeness: float = 0.5
    threshold: float = 0.1
    b_safe: float = 3.0


class LaneVehicle(NamedTuple):
    x: float
    v: float
    lane: int


def _neighbours(x, lane, others, length):
    """(leader, follower) in ``lane`` relative to longitudinal position x."""
    ahead = [o for o in others if o.lane == lane and o.x >= x]
    behind = [o for o in others if o.lane == lane and o.x < x]
    leader = min(ahead, key=lambda o: o.x) if ahead else None
    follower = max(behind, key=lambda o: o.x) if behind else None
    return leader, follower


_UNCLIPPED = (-math.inf, math.inf)


def _acc(me, leader, idm, length):
    # unclipped so the b_safe veto can see braking demands beyond the actuator limit
    if leader is None:
        return idm_acceleration(me.v, params=idm, bounds=_UNCLIPPED)
    gap = leader.x - me.x - length
    if gap <= 0:
        return -math.inf
    return idm_acceleration(me.v, leader.v, gap, idm, _UNCLIPPED)


def mobil_lane_change(ego: LaneVehicle, neighbors, n_lanes: int, idm: IDMParams = IDMParams(),
                      params: MOBILParams = MOBILParams(), length: float = 3.5) -> str:
    """MOBIL decision: 'keep', 'left' (lane + 1) or 'right' (lane - 1)."""
    others = [o for o in neighbors if o is not ego]
    leader, follower = _neighbours(ego.x, ego.lane, others, length)
    a_c = _acc(ego, leader, idm, length)
    # old follower: currently behind ego, afterwards behind ego's leader
    a_o = _acc(follower, ego, idm, length) if follower else 0.0
    a_o_new = _acc(follower, leader, idm, length) if follower else 0.0

    best, best_gain = "keep", params.threshold
    for name, lane in (("left", ego.lane + 1), ("right", ego.lane - 1)):
        if not 0 <= lane < n_lanes:
            continue
        new_leader, new_follower = _neighbours(ego.x, lane, others, length)
        moved = ego._replace(lane=lane)
        a_c_new = _acc(moved, new_leader, idm, length)
        if new_follower is not None:
            a_n = _acc(new_follower, new_leader, idm, length)
            a_n_new = _acc(new_follower, moved, idm, length)
            if a_n_new < -params.b_safe:
                continue
        else:
            a_n = a_n_new = 0.0
        if a_c_new < -params.b_safe:
            continue
        gain = a_c_new - a_c + params.politeness * ((a_n_new - a_n) + (a_o_new - a_o))
        if gain > best_gain:
            best, best_gain = name, gain
    return best


@dataclass(frozen=True)
class FeedbackGains:
    k_v: float = 0.5
    k_y: float = 0.02
    k_theta: float = 0.3


def bv_feedback_control(state, v_target, y_target, gains: FeedbackGains = FeedbackGains(),
                        lb=(-3.0, -5.0 * math.pi / 180), ub=(3.0, 5.0 * math.pi / 180)) -> np.ndarray:
    """Linear feedback on speed and lateral position, clipped to actuator bounds."""
    state = np.asarray(state, dtype=float)
    y, theta, v = state[1], state[2], state[3]
    acc = gains.k_v * (v_target - v)
    steer = -gains.k_y * (y - y_target) - gains.k_theta * theta
    return np.clip(np.array([acc, steer]), lb, ub)


class DatasetSample(NamedTuple):
    experiment_id: int
    step: int
    vehicle_id: int
    input: np.ndarray
    label: np.ndarray


@dataclass
class GenerationSummary:
    experiments: int = 0
    skipped: int = 0
    samples: int = 0
    skip_reasons: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {"experiments": self.experiments, "skipped": self.skipped, "samples": self.samples,
                "skip_reasons": dict(sorted(self.skip_reasons.items()))}


def experiment_rng(seed: int, experiment_id: int) -> np.random.Generator:
    """Independent stream per experiment so output order does not depend on scheduling."""
    return np.random.default_rng([int(seed), int(experiment_id)])


def run_experiment(spec: ScenarioSpec, seed: int, experiment_id: int,
                   constants: VehicleConstants = DEFAULT_CONSTANTS) -> list[DatasetSample]:
    system = sample_system(spec, experiment_rng(seed, experiment_id), constants)
    traces = reach.deduce_trajectory(system, reach.deduce_step_linearized)
    out = []
    for k in range(system.N):
        for i, trace in enumerate(traces):
            prev = system.vehicles[i].state if k == 0 else trace.steps[k - 1]
            x = scope.to_input(prev, trace.controls[k])
            out.append(DatasetSample(experiment_id, k, i, x, scope.to_output(trace.steps[k])))
    return out


def generate_dataset(spec: ScenarioSpec, n_experiments: int, seed: int,
                     constants: VehicleConstants = DEFAULT_CONSTANTS,
                     summary: GenerationSummary | None = None) -> Iterator[DatasetSample]:
    """Stream (input, label) scope-vector pairs, one per vehicle per step."""
    spec.validate()
    summary = summary if summary is not None else GenerationSummary()
    for e in range(n_experiments):
        summary.experiments += 1
        try:
            samples = run_experiment(spec, seed, e, constants)
        except Exception as exc:  # noqa: BLE001 - skipped and counted
            summary.skipped += 1
            cause = getattr(exc, "cause", exc)
            summary.skip_reasons[type(cause).__name__] += 1
            log.warning("experiment %d skipped: %s", e, exc)
            continue
        summary.samples += len(samples)
        yield from samples


HEADER = ("experiment_id", "step", "vehicle_id") + scope.INPUT_COLUMNS + scope.LABEL_COLUMNS


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_dataset(samples, path) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for s in samples:
            w.writerow([s.experiment_id, s.step, s.vehicle_id]
                       + [_fmt(v) for v in s.input] + [_fmt(v) for v in s.label])
            n += 1
    return n


@dataclass
class Dataset:
    experiment_id: np.ndarray
    step: np.ndarray
    vehicle_id: np.ndarray
    inputs: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.inputs)

    def subset(self, mask) -> Dataset:
        return Dataset(self.experiment_id[mask], self.step[mask], self.vehicle_id[mask],
                       self.inputs[mask], self.labels[mask])


def read_dataset(path) -> Dataset:
    with open(path, newline="") as fh:
        header = tuple(next(csv.reader(fh)))
        if header != HEADER:
            raise ValueError(f"{path}: unexpected dataset header")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2).reshape(-1, len(HEADER))
    ids = rows[:, :3].astype(np.int64)
    return Dataset(ids[:, 0], ids[:, 1], ids[:, 2], rows[:, 3:3 + scope.N_IN], rows[:, 3 + scope.N_IN:])


def split_of(experiment_id: int) -> str:
    """Deterministic 5:1:1 train/test/validation assignment by hashed experiment id."""
    h = (int(experiment_id) * 2654435761) % 2 ** 32
    bucket = h % 7
    if bucket < 5:
        return "train"
    return "test" if bucket == 5 else "validation"


def split_dataset(ds: Dataset) -> dict[str, Dataset]:
    names = np.array([split_of(e) for e in ds.experiment_id])
    return {name: ds.subset(names == name) for name in ("train", "test", "validation")}
