"""Safety standards: per-vehicle halfspace containment (S1) and pairwise
occupancy disjointness (S2)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import N_STATE, THETA, XPOS, YPOS
from .errors import DegeneratePolygon, DimensionMismatch, HeadingRangeTooWide
from .sets import Interval, IntervalBox, Zonotope, box_to_zonotope, support

OCTAGON_ANGLES = np.arange(8) * (math.pi / 4.0)
OCTAGON_DIRS = np.stack([np.cos(OCTAGON_ANGLES), np.sin(OCTAGON_ANGLES)], axis=1)


@dataclass(frozen=True, eq=False)
class HalfspaceSet:
    """{x : C x <= d}."""

    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if C.shape[0] != d.shape[0] or C.shape[0] < 1:
            raise DimensionMismatch(f"C has {C.shape[0]} rows, d has {d.shape[0]}")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(d))):
            raise ValueError("halfspace rows must be finite")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)

    @classmethod
    def lateral_bounds(cls, y_min, y_max, dim=N_STATE) -> HalfspaceSet:
        C = np.zeros((2, dim))
        C[0, YPOS] = 1.0
        C[1, YPOS] = -1.0
        return cls(C, [y_max, -y_min])


@dataclass(frozen=True)
class VehicleShape:
    length: float = 3.5
    width: float = 1.8

    def __post_init__(self):
        # zero is allowed so a point body can be represented
        if not (self.length >= 0 and self.width >= 0):
            raise ValueError("vehicle length and width must be non-negative")


@dataclass(frozen=True, eq=False)
class OccupancyPolygon:
    """Convex polygon, vertices counterclockwise."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "vertices", v)

    def support(self, direction) -> float:
        return float(np.max(self.vertices @ np.asarray(direction, dtype=float)))

    @property
    def y_extent(self) -> tuple[float, float]:
        return float(self.vertices[:, 1].min()), float(self.vertices[:, 1].max())

    def contains(self, points, tol=0.0) -> np.ndarray:
        """Closed membership test for rows of ``points`` (convex polygons only)."""
        p = np.atleast_2d(points)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        keep = np.hypot(e[:, 0], e[:, 1]) > 0
        if not np.any(keep):
            return np.all(np.abs(p - v[0]) <= tol, axis=1)
        v, e = v[keep], e[keep]
        # cross(edge, p - vertex) >= 0 for every edge of a ccw polygon
        cross = e[:, 0] * (p[:, None, 1] - v[:, 1]) - e[:, 1] * (p[:, None, 0] - v[:, 0])
        return np.all(cross >= -tol, axis=1)


def check_s1_state(X: Zonotope, S: HalfspaceSet) -> bool:
    """X is inside {x : C x <= d}, decided row by row with the support function."""
    if S.C.shape[1] != X.dim:
        raise DimensionMismatch(f"constraints act on {S.C.shape[1]} dims, set has {X.dim}")
    return all(support(X, row) <= dj for row, dj in zip(S.C, S.d))


def _footprint_support(psi: Interval, shape: VehicleShape) -> float:
    """max over angle psi in the interval of (L/2)|cos psi| + (W/2)|sin psi|."""
    hl, hw = 0.5 * shape.length, 0.5 * shape.width

    def g(a):
        return hl * abs(math.cos(a)) + hw * abs(math.sin(a))

    best = max(g(psi.lb), g(psi.ub))
    # interior maxima sit at +-atan(W/L) + k*pi
    peak = math.atan2(hw, hl)
    for base in (peak, -peak):
        k = math.ceil((psi.lb - base) / math.pi)
        a = base + k * math.pi
        while a <= psi.ub:
            best = max(best, math.hypot(hl, hw))
            a += math.pi
    return best


def occupancy_supports(pos_box: IntervalBox, theta: Interval, shape: VehicleShape) -> np.ndarray:
    """Support values of the swept footprint in the 8 octagon directions."""
    if theta.width >= math.pi / 2:
        raise HeadingRangeTooWide(f"heading range width {theta.width} >= pi/2")
    c, r = pos_box.centers, pos_box.radii
    h = np.empty(8)
    for i, (phi, d) in enumerate(zip(OCTAGON_ANGLES, OCTAGON_DIRS)):
        body = _footprint_support(Interval(phi - theta.ub, phi - theta.lb), shape)
        h[i] = d @ c + abs(d[0]) * r[0] + abs(d[1]) * r[1] + body
    return h


def occupancy(pos_box: IntervalBox, theta: Interval, shape: VehicleShape = VehicleShape()) -> OccupancyPolygon:
    """Octagon over-approximating the body footprint for every position in
    ``pos_box`` and heading in ``theta``."""
    return _octagon(occupancy_supports(pos_box, theta, shape))


def _octagon(h: np.ndarray) -> OccupancyPolygon:
    verts = np.empty((8, 2))
    for i in range(8):
        j = (i + 1) % 8
        A = np.stack([OCTAGON_DIRS[i], OCTAGON_DIRS[j]])
        verts[i] = np.linalg.solve(A, [h[i], h[j]])
    return OccupancyPolygon(verts)


def state_occupancy(box: IntervalBox, shape: VehicleShape = VehicleShape()) -> OccupancyPolygon:
    """Occupancy of a 6-D state box.

    Heading ranges of pi/2 or more fall back to the heading-free bound (the
    circumscribed disc of the body around every position), which is sound
    for any heading.
    """
    pos = IntervalBox(box.centers[[XPOS, YPOS]], box.radii[[XPOS, YPOS]])
    theta = box.interval(THETA)
    if theta.width < math.pi / 2:
        return occupancy(pos, theta, shape)
    c, r = pos.centers, pos.radii
    body = math.hypot(0.5 * shape.length, 0.5 * shape.width)
    return _octagon(OCTAGON_DIRS @ c + np.abs(OCTAGON_DIRS) @ r + body)


def _axes(poly: np.ndarray) -> list:
    e = np.roll(poly, -1, axis=0) - poly
    out = []
    for ex, ey in e:
        n = math.hypot(ex, ey)
        if n > 0:
            out.append((ey / n, -ex / n))
            out.append((ex / n, ey / n))
    return out


def polygons_intersect(P: OccupancyPolygon, Q: OccupancyPolygon) -> bool:
    """Separating-axis test on closed convex polygons; touching counts as intersecting."""
    p, q = P.vertices, Q.vertices
    for poly in (p, q):
        if len(poly) < 1:
            raise DegeneratePolygon("polygon without vertices")
    # edge normals and directions cover polygons, segments and points alike
    axes = _axes(p) + _axes(q) + [(1.0, 0.0), (0.0, 1.0)]
    for ax in axes:
        a = np.asarray(ax)
        pp, qq = p @ a, q @ a
        if pp.max() < qq.min() or qq.max() < pp.min():
            return False
    return True


@dataclass
class SafetyStandards:
    """S1 as lateral road bounds on the occupancy (and optionally state
    halfspaces per vehicle), S2 as ego vs background disjointness."""

    y_bounds: tuple | None = (-2.5, 2.5)
    shape: VehicleShape = field(default_factory=VehicleShape)
    state_constraints: dict = field(default_factory=dict)  # vehicle index -> HalfspaceSet
    check_s2: bool = True


@dataclass
class StepSafety:
    step: int
    s1: list
    s2: list
    safe: bool


@dataclass
class SafetyResult:
    steps: list
    safe: bool

    @property
    def step_flags(self) -> list:
        return [s.safe for s in self.steps]


def check_vehicle_s1(box: IntervalBox, poly: OccupancyPolygon, vehicle: int, standards: SafetyStandards) -> bool:
    ok = True
    if standards.y_bounds is not None:
        lo, hi = poly.y_extent
        ok = standards.y_bounds[0] <= lo and hi <= standards.y_bounds[1]
    hs = standards.state_constraints.get(vehicle)
    if ok and hs is not None:
        ok = check_s1_state(box_to_zonotope(box), hs)
    return ok


def check_system_safety(traces, standards: SafetyStandards) -> SafetyResult:
    """Step k is safe iff every vehicle meets S1 and the ego occupancy is
    disjoint from every background occupancy. No steps means safe."""
    n_steps = len(traces[0].steps) if traces else 0
    if any(len(t.steps) != n_steps for t in traces):
        raise ValueError("traces are not aligned on steps")
    out = []
    for k in range(n_steps):
        boxes = [t.steps[k] for t in traces]
        polys = [state_occupancy(b, standards.shape) for b in boxes]
        s1 = [check_vehicle_s1(b, p, i, standards) for i, (b, p) in enumerate(zip(boxes, polys))]
        s2 = []
        if standards.check_s2:
            s2 = [not polygons_intersect(polys[0], p) for p in polys[1:]]
        out.append(StepSafety(k + 1, s1, s2, all(s1) and all(s2)))
    return SafetyResult(out, all(s.safe for s in out))
