from __future__ import annotations

import numpy as np
import pytest

from weertman.evolution import EvolveConfig, ReferenceProfile, evolve, make_initial
from weertman.grid import make_grid
from weertman.potential import make_quartic, make_sinusoidal, make_tilted_sinusoidal
from weertman.wave_analysis import TravelingWave, measure_velocity_tracking, traveling_wave

CONVERGED = EvolveConfig(dt=0.05, t_end=60.0, record_every=0.5)


@pytest.fixture(scope="session")
def sinusoidal():
    return make_sinusoidal(1.0)


@pytest.fixture(scope="session")
def grid():
    return make_grid(200.0, 4096)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(50.0, 512)


@pytest.fixture(scope="session")
def exact_wave(grid):
    """1/2 + arctan(x)/pi, the A = 1 sinusoidal wave, held entirely in the reference."""
    return TravelingWave(grid=grid, ref=ReferenceProfile(0.0, 1.0, 0.0, 1.0), v=np.zeros(grid.n_points))


def _converged(p, g):
    report, final = evolve(make_initial(g, p, kind="step"), p, CONVERGED)
    return report, final, traveling_wave(final, measure_velocity_tracking(report))


@pytest.fixture(scope="session")
def converged_sinusoidal(sinusoidal, grid):
    return _converged(sinusoidal, grid)


@pytest.fixture(scope="session")
def converged_tilted(grid):
    p = make_tilted_sinusoidal(1.0, 0.01)
    return (p, *_converged(p, grid))


@pytest.fixture(scope="session")
def converged_quartic(grid):
    p = make_quartic()
    return (p, *_converged(p, grid))
