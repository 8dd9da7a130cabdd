"""Traveling waves of d_t u + |d_x| u = -F'(u): spectral solver, analysis and squeeze checks."""

from weertman.config import RunConfig, parse_config
from weertman.evolution import EvolveConfig, RunReport, WaveState, evolve, make_initial
from weertman.grid import Grid, make_grid
from weertman.potential import BistablePotential, make_potential, validate
from weertman.storage import RunRepository
from weertman.wave_analysis import TravelingWave, traveling_wave

__all__ = [
    "BistablePotential",
    "EvolveConfig",
    "Grid",
    "RunConfig",
    "RunReport",
    "RunRepository",
    "TravelingWave",
    "WaveState",
    "evolve",
    "make_grid",
    "make_initial",
    "make_potential",
    "parse_config",
    "traveling_wave",
    "validate",
]
