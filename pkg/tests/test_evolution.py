import numpy as np
import pytest

from weertman.errors import EvolutionError, FrontEscapeError, InitialDataError
from weertman.evolution import (
    EvolveConfig,
    ReferenceProfile,
    RunReport,
    advance,
    evolve,
    front_crossings,
    front_position,
    make_initial,
    step,
    time_derivative,
    translate_state,
    weertman_residual,
)
from weertman.grid import make_grid
from weertman.potential import make_tilted_sinusoidal
from weertman.wave_analysis import shift_distance


def test_reference_profile_shape():
    ref = ReferenceProfile(0.0, 1.0, center=2.0, width=0.5)
    x = np.asarray([2.0])
    assert ref.values(x)[0] == pytest.approx(0.5)
    assert ref.derivative(x)[0] == pytest.approx(0.5 / np.pi)
    assert ref.halflap(x)[0] == pytest.approx(0.0)
    # |d_x| psi = jump a^2 (x - X0) / (pi (1 + a^2 (x - X0)^2))
    assert ref.halflap(np.asarray([4.0]))[0] == pytest.approx(0.25 * 2.0 / (np.pi * 2.0))
    with pytest.raises(EvolutionError):
        ReferenceProfile(0.0, 1.0, width=0.0)


def test_step_data_decomposes(small_grid, sinusoidal):
    s = make_initial(small_grid, sinusoidal, kind="step")
    np.testing.assert_allclose(s.u, np.where(small_grid.points < 0, 0.0, 1.0), atol=1e-14)
    assert s.ref.width == pytest.approx(1.0)
    assert not s.ref.is_flat


def test_initial_range_violation(small_grid, sinusoidal):
    u0 = np.where(small_grid.points < 0, 0.0, 1.0)
    u0[300] = 2.0
    with pytest.raises(InitialDataError, match="initial range violation"):
        make_initial(small_grid, sinusoidal, kind="custom", samples=u0)


def test_initial_limit_violation(small_grid, sinusoidal):
    u0 = np.full(small_grid.N, 0.5)
    with pytest.raises(InitialDataError, match="initial limit violation"):
        make_initial(small_grid, sinusoidal, kind="custom", samples=u0)


def test_equal_ends_give_flat_reference(small_grid, sinusoidal):
    bump = 0.05 * np.exp(-0.5 * np.square(small_grid.points))
    s = make_initial(small_grid, sinusoidal, kind="custom", samples=bump, check_limits=False)
    assert s.ref.is_flat
    np.testing.assert_allclose(s.v, bump, atol=1e-15)


def test_unknown_initial_kind(small_grid, sinusoidal):
    with pytest.raises(InitialDataError, match="unknown initial kind"):
        make_initial(small_grid, sinusoidal, kind="triangle")


def test_arctan_is_a_steady_state(small_grid, sinusoidal):
    s = make_initial(small_grid, sinusoidal, kind="smoothed-step", width=1.0)
    assert s.ref.center == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(s.v)) < 1e-14
    assert np.max(np.abs(time_derivative(s, sinusoidal))) < 1e-12
    assert weertman_residual(small_grid, sinusoidal, s.ref, s.v, 0.0).value < 1e-12
    later = advance(s, sinusoidal, EvolveConfig(dt=0.05), 1.0)
    assert later.t == pytest.approx(1.0)
    assert np.max(np.abs(later.v)) < 1e-12


def test_translation_equivariance(small_grid, sinusoidal):
    bump = 0.05 * np.exp(-0.5 * np.square(small_grid.points / 2.0))
    s = make_initial(small_grid, sinusoidal, kind="custom", samples=bump, check_limits=False)
    shifted = translate_state(s, 17)
    cfg = EvolveConfig(dt=0.05)
    for _ in range(20):
        s, shifted = step(s, sinusoidal, cfg), step(shifted, sinusoidal, cfg)
    np.testing.assert_allclose(shifted.u, np.roll(s.u, 17), atol=1e-12)


def test_range_is_preserved_from_smooth_data(small_grid, sinusoidal):
    x = small_grid.points
    u0 = ReferenceProfile(0.0, 1.0, 3.0, 0.5).values(x) + 0.08 * np.exp(-0.5 * np.square((x + 4.0) / 2.0))
    s0 = make_initial(small_grid, sinusoidal, kind="custom", samples=u0)
    report, _ = evolve(s0, sinusoidal, EvolveConfig(dt=0.05, t_end=20.0, range_check=True))
    lo, hi = sinusoidal.attained_range()
    assert min(report.umin) >= lo - 1e-8
    assert max(report.umax) <= hi + 1e-8


def test_config_validation(sinusoidal):
    with pytest.raises(EvolutionError, match="dt must be positive"):
        EvolveConfig(dt=0.0)
    with pytest.raises(EvolutionError, match="order must be 1 or 2"):
        EvolveConfig(order=3)
    with pytest.raises(EvolutionError, match="stability guard"):
        EvolveConfig(dt=1.0).check_guard(sinusoidal)


def test_report_records_every_interval(small_grid, sinusoidal):
    s0 = make_initial(small_grid, sinusoidal, kind="step")
    report, final = evolve(s0, sinusoidal, EvolveConfig(dt=0.05, t_end=2.0, record_every=0.5))
    assert report.times == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])
    assert final.t == pytest.approx(2.0)
    assert len(report.snapshots) == 5
    frame = report.timeseries_frame()
    assert list(frame.columns) == ["t", "X", "residual", "umin", "umax"]
    again = RunReport.from_frame(small_grid, frame)
    assert again.fronts == report.fronts


def test_front_position_is_linear_interpolation(small_grid):
    u = np.asarray(small_grid.points)
    assert front_position(small_grid, u, 0.3) == pytest.approx(0.3, abs=1e-12)
    assert np.isnan(front_position(small_grid, np.zeros(small_grid.N), 0.5))
    wavy = np.cos(np.pi * u / 10.0)
    assert len(front_crossings(small_grid, wavy, 0.0)) == 10


def test_front_escape():
    g = make_grid(20.0, 256)
    p = make_tilted_sinusoidal(1.0, 0.1)
    s0 = make_initial(g, p, kind="step")
    with pytest.raises(FrontEscapeError, match="front left trusted region"):
        evolve(s0, p, EvolveConfig(dt=0.05, t_end=60.0))


def test_recentering_keeps_a_moving_front_inside():
    g = make_grid(20.0, 256)
    p = make_tilted_sinusoidal(1.0, 0.1)
    s0 = make_initial(g, p, kind="step")
    report, final = evolve(s0, p, EvolveConfig(dt=0.05, t_end=20.0, recenter_every=1.0))
    assert report.recenter_times
    assert final.ref.center < 0


@pytest.mark.slow
def test_step_data_converge_to_the_arctan_wave(converged_sinusoidal, sinusoidal, exact_wave, grid):
    report, final, wave = converged_sinusoidal
    distance, _ = shift_distance(final.u, exact_wave, 0.5)
    assert distance <= 2e-3
    assert abs(wave.c) <= 1e-3
    residual = weertman_residual(grid, sinusoidal, final.ref, final.v, wave.c, center=wave.xi)
    assert residual.value <= 5e-4
    assert residual.monotone
