"""Coverage metrics on the position plane, safety agreement and timing."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import LengthMismatch


class Box2D(NamedTuple):
    lb_x: float
    ub_x: float
    lb_y: float
    ub_y: float

    @classmethod
    def from_state_box(cls, box) -> Box2D:
        lb, ub = box.lb, box.ub
        return cls(float(lb[0]), float(ub[0]), float(lb[1]), float(ub[1]))

    @property
    def area(self) -> float:
        return (self.ub_x - self.lb_x) * (self.ub_y - self.lb_y)

    def contains_point(self, x, y) -> bool:
        return self.lb_x <= x <= self.ub_x and self.lb_y <= y <= self.ub_y


@dataclass(frozen=True)
class BoxPair2D:
    model: Box2D
    label: Box2D

    def __post_init__(self):
        for b in (self.model, self.label):
            if not (b.lb_x <= b.ub_x and b.lb_y <= b.ub_y):
                raise ValueError(f"malformed box {b}")

    @classmethod
    def from_state_boxes(cls, model_box, label_box) -> BoxPair2D:
        return cls(Box2D.from_state_box(model_box), Box2D.from_state_box(label_box))


def overlap_area(a: Box2D, b: Box2D) -> float:
    cover_x = min(a.ub_x, b.ub_x) - max(a.lb_x, b.lb_x)
    cover_y = min(a.ub_y, b.ub_y) - max(a.lb_y, b.lb_y)
    return max(cover_x, 0.0) * max(cover_y, 0.0)


def _ratio(overlap, denom_box: Box2D, other: Box2D) -> float:
    area = denom_box.area
    if area <= 0:
        # zero-area reference: 1 when its center lies in the other box
        cx = 0.5 * (denom_box.lb_x + denom_box.ub_x)
        cy = 0.5 * (denom_box.lb_y + denom_box.ub_y)
        return 1.0 if other.contains_point(cx, cy) else 0.0
    return min(overlap / area, 1.0)


def recall_pos(p: BoxPair2D) -> float:
    """Share of the label's position box covered by the model's."""
    return _ratio(overlap_area(p.model, p.label), p.label, p.model)


def precision_pos(p: BoxPair2D) -> float:
    """Share of the model's position box covered by the label's."""
    return _ratio(overlap_area(p.model, p.label), p.model, p.label)


def recall_precision_batch(model_out: np.ndarray, label_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized recall/precision for rows of 12-wide output scope vectors."""
    mc, mr = model_out[:, 0:2], np.maximum(model_out[:, 6:8], 0.0)
    lc, lr = label_out[:, 0:2], label_out[:, 6:8]
    cover = np.minimum(mc + mr, lc + lr) - np.maximum(mc - mr, lc - lr)
    inter = np.clip(cover, 0.0, None).prod(axis=1)
    a_l = (2 * lr).prod(axis=1)
    a_m = (2 * mr).prod(axis=1)
    in_m = np.all(np.abs(lc - mc) <= mr, axis=1)
    in_l = np.all(np.abs(mc - lc) <= lr, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rec = np.where(a_l > 0, np.minimum(inter / a_l, 1.0), in_m.astype(float))
        prec = np.where(a_m > 0, np.minimum(inter / a_m, 1.0), in_l.astype(float))
    return rec, prec


def agreement(flags_a, flags_b) -> float:
    if len(flags_a) != len(flags_b) or len(flags_a) == 0:
        raise LengthMismatch(f"flag lists of length {len(flags_a)} and {len(flags_b)}")
    return sum(bool(a) == bool(b) for a, b in zip(flags_a, flags_b)) / len(flags_a)


@dataclass(frozen=True)
class Timing:
    mean: float
    std: float
    repeats: int

    def to_dict(self) -> dict:
        return {"mean_s": self.mean, "std_s": self.std, "repeats": self.repeats}


def time_step(op, inputs, repeats: int = 5, warmup: int = 1) -> Timing:
    """Mean and sample stddev of the wall-clock time of ``op(*inputs)``."""
    if repeats < 3:
        raise ValueError("repeats must be >= 3")
    for _ in range(warmup):
        op(*inputs)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        op(*inputs)
        samples.append(time.perf_counter() - t0)
    return Timing(statistics.fmean(samples), statistics.stdev(samples), repeats)
