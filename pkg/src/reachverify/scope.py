"""Scope vectors: flat (center, radius) encodings of boxes.

Input layout (16): state centers, control centers, state radii, control radii.
Output layout (12): state centers, state radii.
"""
from __future__ import annotations

import numpy as np

from .dynamics import CONTROL_NAMES, N_CONTROL, N_STATE, STATE_NAMES
from .sets import IntervalBox

ALL_NAMES = STATE_NAMES + CONTROL_NAMES
INPUT_COLUMNS = tuple(f"c_{n}" for n in ALL_NAMES) + tuple(f"r_{n}" for n in ALL_NAMES)
LABEL_COLUMNS = tuple(f"next_c_{n}" for n in STATE_NAMES) + tuple(f"next_r_{n}" for n in STATE_NAMES)
N_IN = 2 * (N_STATE + N_CONTROL)
N_OUT = 2 * N_STATE


def to_input(state: IntervalBox, control: IntervalBox) -> np.ndarray:
    return np.concatenate([state.centers, control.centers, state.radii, control.radii])


def from_input(vec) -> tuple[IntervalBox, IntervalBox]:
    vec = np.asarray(vec, dtype=float)
    n = N_STATE + N_CONTROL
    c, r = vec[:n], vec[n:]
    return IntervalBox(c[:N_STATE], r[:N_STATE]), IntervalBox(c[N_STATE:], r[N_STATE:])


def to_output(state: IntervalBox) -> np.ndarray:
    return np.concatenate([state.centers, state.radii])


def from_output(vec) -> IntervalBox:
    vec = np.asarray(vec, dtype=float)
    return IntervalBox(vec[:N_STATE], np.maximum(vec[N_STATE:], 0.0))
