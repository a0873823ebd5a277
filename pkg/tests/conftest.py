import numpy as np
import pytest

from chaosbench import dynamics
from chaosbench.precision import DOUBLE, EXTENDED, SINGLE

IC = [0.0, 0.45, 1.41]


@pytest.fixture(scope="session")
def lorenz_double_10k():
    return dynamics.integrate(IC, 10_000, 0.02, prec=DOUBLE)


@pytest.fixture(scope="session")
def lorenz_single_10k():
    return dynamics.integrate(IC, 10_000, 0.02, prec=SINGLE)


@pytest.fixture(scope="session")
def lorenz_double_50k():
    return dynamics.integrate(IC, 50_000, 0.02, prec=DOUBLE)


@pytest.fixture(scope="session")
def extended_ref_from(lorenz_double_10k):
    """Extended continuation trajectories keyed by (start traj id, steps)."""
    cache = {}

    def make(traj, steps):
        key = (id(traj), steps)
        if key not in cache:
            last = traj.as_double()[-1]
            ref = dynamics.integrate(last, steps, traj.dt,
                                     system=traj.system, prec=EXTENDED)
            cache[key] = dynamics.Trajectory(
                traj.system, traj.dt, ref.points[1:], EXTENDED,
                points_lo=ref.points_lo[1:])
        return cache[key]

    return make
