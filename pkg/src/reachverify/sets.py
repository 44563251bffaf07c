"""Interval and zonotope set arithmetic.

``Interval`` works on bounds, ``IntervalBox`` on (center, radius) per
dimension. Conversions between boxes and zonotopes are explicit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DivisorContainsZero

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class Interval:
    lb: float
    ub: float

    def __post_init__(self):
        if not self.lb <= self.ub:
            raise ValueError(f"invalid interval [{self.lb}, {self.ub}]")

    @classmethod
    def point(cls, x) -> Interval:
        return cls(float(x), float(x))

    @classmethod
    def centered(cls, c, r) -> Interval:
        return cls(float(c - r), float(c + r))

    @property
    def mid(self) -> float:
        return 0.5 * (self.lb + self.ub)

    @property
    def rad(self) -> float:
        return 0.5 * (self.ub - self.lb)

    @property
    def width(self) -> float:
        return self.ub - self.lb

    def mag(self) -> float:
        """Largest absolute value in the interval."""
        return max(abs(self.lb), abs(self.ub))

    def contains(self, x) -> bool:
        return self.lb <= x <= self.ub

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lb, other.lb), max(self.ub, other.ub))

    def __add__(self, other):
        other = _coerce(other)
        return Interval(self.lb + other.lb, self.ub + other.ub)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.ub, -self.lb)

    def __sub__(self, other):
        other = _coerce(other)
        return Interval(self.lb - other.ub, self.ub - other.lb)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        p = (self.lb * other.lb, self.lb * other.ub, self.ub * other.lb, self.ub * other.ub)
        return Interval(min(p), max(p))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.lb <= 0.0 <= other.ub:
            raise DivisorContainsZero(f"denominator {other} contains 0")
        return self * Interval(1.0 / other.ub, 1.0 / other.lb)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def sqr(self) -> Interval:
        lo, hi = sorted((self.lb * self.lb, self.ub * self.ub))
        if self.lb <= 0.0 <= self.ub:
            lo = 0.0
        return Interval(lo, hi)

    def __repr__(self):
        return f"Interval({self.lb!r}, {self.ub!r})"


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval.point(x)


def add(a, b) -> Interval:
    return _coerce(a) + _coerce(b)


def subtract(a, b) -> Interval:
    return _coerce(a) - _coerce(b)


def multiply(a, b) -> Interval:
    return _coerce(a) * _coerce(b)


def divide(a, b) -> Interval:
    return _coerce(a) / _coerce(b)


def _has_point(lb, ub, offset) -> bool:
    # is there an integer k with offset + 2*pi*k in [lb, ub]?
    k = math.ceil((lb - offset) / TWO_PI)
    return offset + TWO_PI * k <= ub


def cos(x) -> Interval:
    """Exact range of cos over the interval (interior extrema included)."""
    x = _coerce(x)
    if x.width >= TWO_PI:
        return Interval(-1.0, 1.0)
    ca, cb = math.cos(x.lb), math.cos(x.ub)
    lo, hi = min(ca, cb), max(ca, cb)
    if _has_point(x.lb, x.ub, 0.0):
        hi = 1.0
    if _has_point(x.lb, x.ub, math.pi):
        lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


def sin(x) -> Interval:
    """Exact range of sin over the interval (interior extrema included)."""
    x = _coerce(x)
    if x.width >= TWO_PI:
        return Interval(-1.0, 1.0)
    sa, sb = math.sin(x.lb), math.sin(x.ub)
    lo, hi = min(sa, sb), max(sa, sb)
    if _has_point(x.lb, x.ub, HALF_PI):
        hi = 1.0
    if _has_point(x.lb, x.ub, -HALF_PI):
        lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


@dataclass(frozen=True, eq=False)
class IntervalBox:
    """Axis-aligned box stored as per-dimension centers and radii."""

    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.array(self.centers, dtype=float).reshape(-1)
        r = np.array(self.radii, dtype=float).reshape(-1)
        if c.shape != r.shape:
            raise DimensionMismatch(f"centers {c.shape} vs radii {r.shape}")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError(f"radii must be finite and non-negative, got {r}")
        c.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_bounds(cls, lb, ub) -> IntervalBox:
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        return cls(0.5 * (lb + ub), 0.5 * (ub - lb))

    @classmethod
    def from_intervals(cls, intervals) -> IntervalBox:
        return cls.from_bounds([i.lb for i in intervals], [i.ub for i in intervals])

    @property
    def dim(self) -> int:
        return self.centers.shape[0]

    @property
    def lb(self) -> np.ndarray:
        return self.centers - self.radii

    @property
    def ub(self) -> np.ndarray:
        return self.centers + self.radii

    def interval(self, i) -> Interval:
        return Interval(float(self.centers[i] - self.radii[i]), float(self.centers[i] + self.radii[i]))

    def intervals(self) -> list[Interval]:
        return [self.interval(i) for i in range(self.dim)]

    def contains(self, points) -> np.ndarray:
        """Boolean mask of which rows of ``points`` lie in the (closed) box."""
        p = np.atleast_2d(points)
        return np.all((p >= self.lb) & (p <= self.ub), axis=-1)

    def contains_box(self, other: IntervalBox) -> bool:
        return bool(np.all(self.lb <= other.lb) and np.all(other.ub <= self.ub))

    def hull(self, other: IntervalBox) -> IntervalBox:
        return IntervalBox.from_bounds(np.minimum(self.lb, other.lb), np.maximum(self.ub, other.ub))

    def sample(self, n, rng) -> np.ndarray:
        return self.centers + self.radii * rng.uniform(-1.0, 1.0, size=(n, self.dim))

    def vertices(self) -> np.ndarray:
        k = self.dim
        signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * k, indexing="ij")).reshape(k, -1).T
        return self.centers + signs * self.radii

    def concat(self, other: IntervalBox) -> IntervalBox:
        return IntervalBox(np.concatenate([self.centers, other.centers]),
                           np.concatenate([self.radii, other.radii]))

    def __eq__(self, other):
        if not isinstance(other, IntervalBox):
            return NotImplemented
        return np.array_equal(self.centers, other.centers) and np.array_equal(self.radii, other.radii)

    def __repr__(self):
        return f"IntervalBox(centers={self.centers.tolist()}, radii={self.radii.tolist()})"


@dataclass(frozen=True, eq=False)
class Zonotope:
    """{center + G @ alpha : alpha in [-1, 1]^g}."""

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        G = np.array(self.generators, dtype=float)
        if G.size == 0:
            G = np.zeros((c.shape[0], 0))
        if G.ndim != 2 or G.shape[0] != c.shape[0]:
            raise DimensionMismatch(f"generators {G.shape} do not match center {c.shape}")
        c.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def order(self) -> int:
        return self.generators.shape[1]

    def linear_map(self, M, offset=None) -> Zonotope:
        M = np.asarray(M, dtype=float)
        c = M @ self.center
        if offset is not None:
            c = c + offset
        return Zonotope(c, M @ self.generators)

    def minkowski_sum(self, other: Zonotope) -> Zonotope:
        return Zonotope(self.center + other.center, np.hstack([self.generators, other.generators]))

    def sample(self, n, rng) -> np.ndarray:
        alpha = rng.uniform(-1.0, 1.0, size=(n, self.order))
        return self.center + alpha @ self.generators.T


def box_to_zonotope(b: IntervalBox) -> Zonotope:
    return Zonotope(b.centers.copy(), np.diag(b.radii))


def zonotope_to_box(z: Zonotope) -> IntervalBox:
    """Interval hull of a zonotope."""
    return IntervalBox(z.center.copy(), np.abs(z.generators).sum(axis=1))


def support(z: Zonotope, direction) -> float:
    """max of direction . x over x in z."""
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.shape[0] != z.dim:
        raise DimensionMismatch(f"direction has dimension {d.shape[0]}, zonotope {z.dim}")
    return float(d @ z.center + np.abs(d @ z.generators).sum())
