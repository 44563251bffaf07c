"""Two-degree-of-freedom bicycle model.

State order is (x_pos, y_pos, theta, v, w, r); control order is (a_cc, delta_f).
Point functions accept arrays with the variable on the last axis, so a batch
of states can be pushed through at once.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import sets
from .errors import SpeedBelowGuard
from .sets import Interval

STATE_NAMES = ("xpos", "ypos", "theta", "v", "w", "r")
CONTROL_NAMES = ("acc", "deltaf")
N_STATE = 6
N_CONTROL = 2
XPOS, YPOS, THETA, V, W, R = range(6)
ACC, DELTA = range(2)

DEFAULT_V_GUARD = 0.1


class VehicleState(NamedTuple):
    x_pos: float
    y_pos: float
    theta: float
    v: float
    w: float
    r: float


class ControlSignal(NamedTuple):
    a_cc: float
    delta_f: float


@dataclass(frozen=True)
class VehicleConstants:
    m: float = 1500.0
    I_z: float = 2800.0
    a: float = 1.2
    b: float = 1.4
    C_af: float = 1.7e5
    C_ar: float = 1.3e5

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"vehicle constant {name} must be positive, got {value}")

    # Lumped coefficients of the lateral equations.
    @property
    def k_ww(self):
        return (self.C_af + self.C_ar) / self.m

    @property
    def k_wr(self):
        return (self.b * self.C_ar - self.a * self.C_af) / self.m

    @property
    def k_wd(self):
        return self.C_af / self.m

    @property
    def k_rw(self):
        return (self.b * self.C_ar - self.a * self.C_af) / self.I_z

    @property
    def k_rr(self):
        return (self.a ** 2 * self.C_af + self.b ** 2 * self.C_ar) / self.I_z

    @property
    def k_rd(self):
        return self.a * self.C_af / self.I_z

    @property
    def lateral_stiffness(self):
        """Upper bound on v * |fast lateral eigenvalue|, used to size stable Euler sub-steps."""
        return max(self.k_ww, self.k_rr)


DEFAULT_CONSTANTS = VehicleConstants()


def _check_speed(v, v_guard):
    v = np.asarray(v)
    if np.any(~(v > v_guard)):
        worst = float(np.nanmin(v)) if np.any(np.isfinite(v)) else float("nan")
        raise SpeedBelowGuard(worst, v_guard)


def derivative(x, u, k: VehicleConstants = DEFAULT_CONSTANTS, v_guard=DEFAULT_V_GUARD) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    th, v, w, r = x[..., THETA], x[..., V], x[..., W], x[..., R]
    _check_speed(v, v_guard)
    acc, df = u[..., ACC], u[..., DELTA]
    c, s = np.cos(th), np.sin(th)
    out = np.empty(np.broadcast_shapes(x.shape[:-1], u.shape[:-1]) + (N_STATE,))
    out[..., XPOS] = v * c + w * s
    out[..., YPOS] = -w * c + v * s
    out[..., THETA] = r
    out[..., V] = acc
    out[..., W] = -k.k_ww / v * w - (k.k_wr / v - v) * r + k.k_wd * df
    out[..., R] = -k.k_rw / v * w - k.k_rr / v * r + k.k_rd * df
    return out


def euler_step(x, u, dt, k: VehicleConstants = DEFAULT_CONSTANTS, v_guard=DEFAULT_V_GUARD) -> np.ndarray:
    """One explicit Euler step x + f(x, u) * dt."""
    x = np.asarray(x, dtype=float)
    return x + derivative(x, u, k, v_guard) * dt


def integrate(x, u, dt, substeps=1, k: VehicleConstants = DEFAULT_CONSTANTS, v_guard=DEFAULT_V_GUARD):
    """``substeps`` chained Euler steps of length dt / substeps with u held fixed."""
    h = dt / substeps
    x = np.asarray(x, dtype=float)
    for _ in range(substeps):
        x = euler_step(x, u, h, k, v_guard)
    return x


def jacobian(x, u, k: VehicleConstants = DEFAULT_CONSTANTS, v_guard=DEFAULT_V_GUARD):
    """Analytic (df/dx, df/du) at a single point."""
    th, v, w, r = (float(x[i]) for i in (THETA, V, W, R))
    _check_speed(v, v_guard)
    c, s = math.cos(th), math.sin(th)
    A = np.zeros((N_STATE, N_STATE))
    B = np.zeros((N_STATE, N_CONTROL))
    A[XPOS, THETA] = -v * s + w * c
    A[XPOS, V] = c
    A[XPOS, W] = s
    A[YPOS, THETA] = w * s + v * c
    A[YPOS, V] = s
    A[YPOS, W] = -c
    A[THETA, R] = 1.0
    A[W, V] = k.k_ww * w / v ** 2 + (k.k_wr / v ** 2 + 1.0) * r
    A[W, W] = -k.k_ww / v
    A[W, R] = v - k.k_wr / v
    A[R, V] = (k.k_rw * w + k.k_rr * r) / v ** 2
    A[R, W] = -k.k_rw / v
    A[R, R] = -k.k_rr / v
    B[V, ACC] = 1.0
    B[W, DELTA] = k.k_wd
    B[R, DELTA] = k.k_rd
    return A, B


def derivative_interval(xs, us, k: VehicleConstants = DEFAULT_CONSTANTS, v_guard=DEFAULT_V_GUARD):
    """Interval enclosure of the derivative over state/control intervals.

    ``xs`` holds 6 Intervals, ``us`` holds 2; returns a list of 6 Intervals.
    """
    th, v, w, r = xs[THETA], xs[V], xs[W], xs[R]
    if not v.lb > v_guard:
        raise SpeedBelowGuard(v.lb, v_guard)
    acc, df = us
    c, s = sets.cos(th), sets.sin(th)
    return [
        v * c + w * s,
        s * v - w * c,
        r,
        acc,
        -k.k_ww * (w / v) - (k.k_wr / v - v) * r + k.k_wd * df,
        -k.k_rw * (w / v) - k.k_rr * (r / v) + k.k_rd * df,
    ]


def jacobian_interval(xs, us, k: VehicleConstants = DEFAULT_CONSTANTS, v_guard=DEFAULT_V_GUARD):
    """Interval enclosure of the full Jacobian d f / d(x, u) over a box.

    Returns a 6x8 nested list of Intervals (columns: 6 states then 2 controls).
    """
    th, v, w, r = xs[THETA], xs[V], xs[W], xs[R]
    if not v.lb > v_guard:
        raise SpeedBelowGuard(v.lb, v_guard)
    zero = Interval(0.0, 0.0)
    one = Interval(1.0, 1.0)
    c, s = sets.cos(th), sets.sin(th)
    inv_v = 1.0 / v
    inv_v2 = inv_v.sqr()
    J = [[zero] * 8 for _ in range(N_STATE)]
    J[XPOS][THETA] = w * c - v * s
    J[XPOS][V] = c
    J[XPOS][W] = s
    J[YPOS][THETA] = w * s + v * c
    J[YPOS][V] = s
    J[YPOS][W] = -c
    J[THETA][R] = one
    J[V][6 + ACC] = one
    J[W][V] = (k.k_ww * w + k.k_wr * r) * inv_v2 + r
    J[W][W] = -k.k_ww * inv_v
    J[W][R] = v - k.k_wr * inv_v
    J[W][6 + DELTA] = Interval.point(k.k_wd)
    J[R][V] = (k.k_rw * w + k.k_rr * r) * inv_v2
    J[R][W] = -k.k_rw * inv_v
    J[R][R] = -k.k_rr * inv_v
    J[R][6 + DELTA] = Interval.point(k.k_rd)
    return J
