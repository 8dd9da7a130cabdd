import math

import numpy as np
import pytest

from weertman.errors import AnalysisError
from weertman.evolution import ReferenceProfile, RunReport
from weertman.wave_analysis import (
    TravelingWave,
    analysis_summary,
    derivative_bounds,
    distance_series,
    fit_convergence_rate,
    fit_tail,
    measure_velocity_tracking,
    predicted_tail_prefactor,
    second_derivative_decay,
    shift_distance,
    shift_profile,
    truncated_integrals,
    velocity_identity_energy,
    velocity_identity_integral,
)


def _report(grid, times, fronts):
    report = RunReport(grid=grid)
    report.times = list(times)
    report.fronts = list(fronts)
    return report


def test_tracking_slope(small_grid):
    t = np.arange(0.0, 20.01, 0.5)
    assert measure_velocity_tracking(_report(small_grid, t, 0.3 * t + 1.0)) == pytest.approx(0.3, abs=1e-12)


def test_tracking_needs_samples(small_grid):
    with pytest.raises(AnalysisError, match="at least 10"):
        measure_velocity_tracking(_report(small_grid, [0.0, 0.1], [0.0, 0.0]))


def test_convergence_rate_on_synthetic_decay():
    t = np.arange(0.0, 40.0, 0.5)
    fit = fit_convergence_rate(t, 3.0 * np.exp(-0.5 * t))
    assert fit.kappa == pytest.approx(0.5, rel=1e-9)
    assert fit.K == pytest.approx(3.0, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.decades >= 3.0


def test_no_exponential_regime():
    with pytest.raises(AnalysisError, match="no exponential regime found"):
        fit_convergence_rate([0.0, 0.1], [0.5, 0.4])


def test_balanced_wave_has_zero_velocity(exact_wave, sinusoidal):
    assert velocity_identity_energy(exact_wave, sinusoidal) == pytest.approx(0.0, abs=1e-14)
    assert velocity_identity_integral(exact_wave, sinusoidal) == pytest.approx(0.0, abs=1e-10)


def test_truncated_integral_of_derivative(exact_wave, sinusoidal):
    values = truncated_integrals(exact_wave, sinusoidal, [10.0, 50.0])
    assert values == pytest.approx([0.0, 0.0], abs=1e-10)
    x = exact_wave.grid.points
    inside = np.abs(x) <= 50.0
    assert exact_wave.grid.spacing * np.sum(exact_wave.derivative[inside]) == pytest.approx(
        2.0 * math.atan(50.0) / math.pi, abs=1e-3
    )


def test_radii_are_checked(exact_wave, sinusoidal):
    with pytest.raises(AnalysisError, match="strictly increasing"):
        velocity_identity_integral(exact_wave, sinusoidal, [20.0, 10.0])
    with pytest.raises(AnalysisError, match="L/2"):
        velocity_identity_integral(exact_wave, sinusoidal, [10.0, 150.0])


def test_arctan_tail(exact_wave, sinusoidal):
    fit = fit_tail(exact_wave, sinusoidal, "right")
    assert fit.exponent == pytest.approx(-1.0, abs=0.01)
    assert fit.prefactor == pytest.approx(predicted_tail_prefactor(sinusoidal, "right"), rel=0.01)
    left = fit_tail(exact_wave, sinusoidal, "left")
    assert left.exponent == pytest.approx(-1.0, abs=0.01)
    assert exact_wave.tail_right is fit and exact_wave.tail_left is left


def test_tail_window_limits(grid, exact_wave, sinusoidal):
    with pytest.raises(AnalysisError, match="10 <= x_lo"):
        fit_tail(exact_wave, sinusoidal, "right", (5.0, 50.0))
    flat = TravelingWave(grid=grid, ref=ReferenceProfile(1.0, 1.0), v=np.zeros(grid.n_points))
    with pytest.raises(AnalysisError, match="window too far"):
        fit_tail(flat, sinusoidal, "right")


def test_derivative_bounds_bracket_one_over_pi(exact_wave):
    lower, upper = derivative_bounds(exact_wave, "right", (10.0, 80.0))
    assert 0.3 < lower <= upper <= 1.0 / math.pi


def test_second_derivative_decays_cubically(exact_wave):
    fit = second_derivative_decay(exact_wave, "right")
    assert fit.exponent == pytest.approx(-3.0, abs=0.01)
    assert fit.prefactor == pytest.approx(2.0 / math.pi, rel=0.05)


def test_shift_distance_recovers_offset(exact_wave):
    moved = exact_wave.ref.recentered(0.37).values(exact_wave.grid.points)
    distance, shift = shift_distance(moved, exact_wave)
    assert shift == pytest.approx(0.37, abs=1e-5)
    assert distance < 1e-5
    np.testing.assert_allclose(shift_profile(exact_wave, 0.37), moved, atol=1e-12)


def test_summary_keys(exact_wave):
    summary = analysis_summary(0.0, 0.0, 0.0, exact_wave, None)
    assert set(summary) >= {"c_tracking", "c_idc1", "c_idc2", "K", "kappa", "r2", "tail_right_exponent"}
    assert math.isnan(summary["kappa"])


@pytest.mark.slow
def test_converged_run_rate_and_tails(converged_sinusoidal, sinusoidal):
    report, _, wave = converged_sinusoidal
    fit = fit_tail(wave, sinusoidal, "right")
    assert fit.exponent == pytest.approx(-1.0, abs=0.05)
    assert fit.prefactor == pytest.approx(predicted_tail_prefactor(sinusoidal, "right"), rel=0.1)
    distances = distance_series(report, wave)
    rate = fit_convergence_rate(report.times, distances)
    assert rate.kappa > 0
    assert rate.r_squared >= 0.99


@pytest.mark.slow
def test_tilted_estimators_agree(converged_tilted):
    p, _, _, wave = converged_tilted
    estimates = np.asarray([wave.c, velocity_identity_energy(wave, p), velocity_identity_integral(wave, p)])
    assert np.all(np.sign(estimates) == np.sign(p.energy_gap))
    assert np.ptp(estimates) <= 0.02 * np.max(np.abs(estimates))


@pytest.mark.slow
def test_quartic_tail(converged_quartic):
    p, _, _, wave = converged_quartic
    assert fit_tail(wave, p, "right").exponent == pytest.approx(-1.0, abs=0.1)
