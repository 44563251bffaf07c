import numpy as np

from reachverify.reach import StepInput
from reachverify.scenario import TABLE4_CENTERS, TABLE4_RADII, VARIABLES
from reachverify.sets import IntervalBox

C_LO = np.array([TABLE4_CENTERS[n][0] for n in VARIABLES])
C_HI = np.array([TABLE4_CENTERS[n][1] for n in VARIABLES])
R_LO = np.array([TABLE4_RADII[n][0] for n in VARIABLES])
R_HI = np.array([TABLE4_RADII[n][1] for n in VARIABLES])


def random_step_input(rng, dt=0.2):
    """A one-step input with centers and radii drawn from the Table-4 ranges."""
    c = rng.uniform(C_LO, C_HI)
    r = rng.uniform(R_LO, R_HI)
    return StepInput(IntervalBox(c[:6], r[:6]), IntervalBox(c[6:], r[6:]), dt)
