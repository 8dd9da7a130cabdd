import math
from dataclasses import replace

import numpy as np
import pytest

from weertman.errors import SqueezeError
from weertman.evolution import EvolveConfig, ReferenceProfile
from weertman.potential import sup_curvature
from weertman.squeeze import (
    RESIDUAL_FACTOR,
    ComparisonReport,
    build_subsuper,
    compute_squeeze_params,
    squeezed_data,
    verify_comparison,
    verify_sandwich,
    verify_subsuper_residual,
)
from weertman.wave_analysis import TravelingWave

TIMES = np.linspace(0.0, 10.0, 25)
POINTS = np.linspace(-40.0, 40.0, 64)
SHORT = EvolveConfig(dt=0.05, t_end=4.0)


@pytest.fixture(scope="module")
def small_wave(small_grid):
    return TravelingWave(grid=small_grid, ref=ReferenceProfile(0.0, 1.0, 0.0, 1.0), v=np.zeros(small_grid.n_points))


@pytest.fixture(scope="module")
def uncapped(sinusoidal, exact_wave):
    return compute_squeeze_params(sinusoidal, exact_wave, 0.05, cap_sigma=False)


def test_params_on_exact_wave(uncapped):
    # |eta - 1| = atan(1/R) / pi first drops below (delta0 - delta1) / 2 = 0.025 here
    assert uncapped.R0 == pytest.approx(1.0 / math.tan(0.025 * math.pi), abs=1e-2)
    assert uncapped.beta == pytest.approx(math.cos(0.2 * math.pi), abs=1e-6)
    assert uncapped.delta == pytest.approx(0.025)
    assert uncapped.sigma == uncapped.sigma_uncapped
    assert uncapped.sigma_exceeds_one
    assert not uncapped.capped


def test_sigma_follows_the_core_slope(sinusoidal, uncapped):
    # inf of eta' on |y| < R0 is 1 / (pi (1 + R0^2)) for the arctan wave
    slope_floor = 1.0 / (math.pi * (1.0 + uncapped.R0**2))
    expected = (sup_curvature(sinusoidal) + uncapped.beta) / (uncapped.beta * slope_floor)
    assert uncapped.sigma_uncapped == pytest.approx(expected, rel=3e-2)
    assert 1000.0 < uncapped.sigma_uncapped < 1300.0


def test_sigma_cap(sinusoidal, exact_wave, uncapped):
    messages = []
    capped = compute_squeeze_params(sinusoidal, exact_wave, 0.05, logger=messages.append)
    assert capped.sigma == 1.0
    assert capped.sigma_uncapped == pytest.approx(uncapped.sigma_uncapped)
    assert any("> 1" in message for message in messages)


def test_parameter_ranges(sinusoidal, exact_wave):
    with pytest.raises(SqueezeError, match="delta1 must lie"):
        compute_squeeze_params(sinusoidal, exact_wave, 0.2)
    with pytest.raises(SqueezeError, match="delta must lie"):
        compute_squeeze_params(sinusoidal, exact_wave, 0.05, delta=0.06)


def test_subsuper_at_time_zero(exact_wave, uncapped):
    x = np.array([-5.0, 0.0, 5.0])
    eta = 0.5 + np.arctan(x) / math.pi
    np.testing.assert_allclose(build_subsuper(exact_wave, uncapped, 1, 0.0, x), eta + uncapped.delta, atol=1e-12)
    np.testing.assert_allclose(build_subsuper(exact_wave, uncapped, -1, 0.0, x), eta - uncapped.delta, atol=1e-12)
    with pytest.raises(SqueezeError, match="-1 or \\+1"):
        build_subsuper(exact_wave, uncapped, 0, 0.0, x)


def test_subsuper_spreads_over_time(exact_wave, uncapped):
    x = np.array([0.0])
    upper = build_subsuper(exact_wave, uncapped, 1, 5.0, x)
    lower = build_subsuper(exact_wave, uncapped, -1, 5.0, x)
    assert lower[0] < 0.5 < upper[0]


def test_uncapped_residual_has_sign(sinusoidal, exact_wave, uncapped):
    report = verify_subsuper_residual(sinusoidal, exact_wave, uncapped, TIMES, POINTS, tolerance=5e-3)
    assert report.passed, report.violations.head()
    assert len(report.samples) == 2 * len(TIMES) * len(POINTS)
    assert report.as_dict()["subsuper_violations"] == 0


def test_capped_residual_is_violated(sinusoidal, exact_wave):
    capped = compute_squeeze_params(sinusoidal, exact_wave, 0.05, cap_sigma=True)
    report = verify_subsuper_residual(sinusoidal, exact_wave, capped, TIMES, POINTS, tolerance=5e-3)
    assert not report.passed
    assert report.worst < -5e-3


def test_comparison_keeps_order(sinusoidal, small_grid):
    x = small_grid.points
    low = ReferenceProfile(0.0, 1.0, 0.0, 1.0).values(x)
    high = ReferenceProfile(0.0, 1.0, -2.0, 1.0).values(x)
    report = verify_comparison(sinusoidal, small_grid, low, high, SHORT, (0.5, 1.0, 2.0, 4.0))
    assert report.passed
    assert report.strict_checked and report.strict_gap > 0
    assert [row["t"] for row in report.gaps] == [0.5, 1.0, 2.0, 4.0]


def test_comparison_rejects_unordered_data(sinusoidal, small_grid):
    x = small_grid.points
    low = ReferenceProfile(0.0, 1.0, 0.0, 1.0).values(x)
    with pytest.raises(SqueezeError, match="must not exceed"):
        verify_comparison(sinusoidal, small_grid, low + 0.01, low, SHORT, (1.0,))


def test_sandwich_holds_for_the_wave(sinusoidal, exact_wave, uncapped):
    report = verify_sandwich(sinusoidal, exact_wave, uncapped, SHORT, (0.5, 1.0, 2.0))
    assert report.passed
    assert report.times == pytest.approx([0.5, 1.0, 2.0])


def test_sandwich_rejects_unsqueezed_data(sinusoidal, exact_wave, uncapped):
    with pytest.raises(SqueezeError, match="not squeezed"):
        verify_sandwich(sinusoidal, exact_wave, uncapped, SHORT, (0.5,), u0=exact_wave.eta + 0.1)


def test_sandwich_from_squeezed_data(sinusoidal, small_wave):
    sp = compute_squeeze_params(sinusoidal, small_wave, 0.05, cap_sigma=False)
    u0 = squeezed_data(small_wave, sp)
    gap = np.abs(u0 - small_wave.eta)
    assert 0.01 < np.max(gap) <= 0.4 * 2.0 * sp.delta + 1e-12
    report = verify_sandwich(sinusoidal, small_wave, sp, SHORT, (0.5, 1.0, 2.0, 4.0), u0=u0)
    assert report.passed
    assert min(report.worst_lower, report.worst_upper) > 0


def test_squeezed_data_wiggle_range(small_wave, sinusoidal):
    sp = compute_squeeze_params(sinusoidal, small_wave, 0.05, cap_sigma=False)
    with pytest.raises(SqueezeError, match="wiggle"):
        squeezed_data(small_wave, sp, wiggle=0.5)
    np.testing.assert_allclose(squeezed_data(small_wave, sp, wiggle=0.0), small_wave.eta, atol=1e-12)


def test_residual_mirrors_between_sub_and_super(sinusoidal, exact_wave, uncapped):
    # eta(-x) = 1 - eta(x) and F' is odd about 1/2, so w_{-1}(t, -x) = 1 - w_{+1}(t, x)
    report = verify_subsuper_residual(sinusoidal, exact_wave, uncapped, TIMES, POINTS, tolerance=5e-3)
    samples = report.samples
    for t in TIMES[::6]:
        upper = samples[(samples["i"] == 1) & (samples["t"] == t)]["value"].to_numpy()
        lower = samples[(samples["i"] == -1) & (samples["t"] == t)]["value"].to_numpy()
        np.testing.assert_allclose(lower, upper[::-1], atol=1e-9)


def test_vanishing_delta_leaves_the_wave_residual(sinusoidal, exact_wave):
    sp = compute_squeeze_params(sinusoidal, exact_wave, 0.05, delta=1e-10, cap_sigma=True)
    report = verify_subsuper_residual(sinusoidal, exact_wave, sp, TIMES, POINTS)
    assert report.samples["value"].abs().max() <= report.profile_residual + 1e-8


def test_default_tolerance_follows_the_residual(sinusoidal, small_grid, small_wave):
    sp = compute_squeeze_params(sinusoidal, small_wave, 0.05, cap_sigma=False)
    bumped = TravelingWave(
        grid=small_grid, ref=small_wave.ref, v=1e-3 * np.exp(-np.square(np.asarray(small_grid.points)))
    )
    loose = verify_subsuper_residual(sinusoidal, bumped, sp, TIMES[:3], POINTS, ceiling=5e-3)
    assert loose.profile_residual > 1e-6
    assert loose.tolerance == pytest.approx(min(RESIDUAL_FACTOR * loose.profile_residual, 5e-3))
    clipped = verify_subsuper_residual(sinusoidal, bumped, sp, TIMES[:3], POINTS, ceiling=1e-6)
    assert clipped.tolerance == 1e-6
    explicit = verify_subsuper_residual(sinusoidal, bumped, sp, TIMES[:3], POINTS, tolerance=0.5, ceiling=1e-6)
    assert explicit.tolerance == 0.5


def test_comparison_of_constant_bounds(sinusoidal, small_grid):
    low = np.full(small_grid.n_points, sinusoidal.eta_l - sinusoidal.delta0)
    high = np.full(small_grid.n_points, sinusoidal.eta_r + sinusoidal.delta0)
    report = verify_comparison(sinusoidal, small_grid, low, high, SHORT, (0.5, 1.0, 2.0))
    assert report.passed
    assert report.strict_checked
    assert report.strict_gap > 0


def test_strict_gap_covers_the_whole_grid(sinusoidal, small_grid):
    x = small_grid.points
    low = ReferenceProfile(0.0, 1.0, 0.0, 1.0).values(x)
    high = ReferenceProfile(0.0, 1.0, -2.0, 1.0).values(x)
    report = verify_comparison(sinusoidal, small_grid, low, high, SHORT, (0.5, 1.0))
    at_one = next(row for row in report.gaps if row["t"] == 1.0)
    assert report.strict_gap == at_one["min_gap"]
    # the smallest gap sits at the edges, outside |x| <= L/2
    assert abs(at_one["x"]) > 0.5 * small_grid.L


def test_comparison_report_verdict():
    ordered = ComparisonReport(
        tolerance=1e-9, worst_gap=0.0, worst_t=1.0, worst_x=0.0, strict_checked=True, strict_gap=1e-6
    )
    assert ordered.passed
    touching = replace(ordered, strict_gap=0.0)
    assert touching.ordered and not touching.passed
    assert replace(touching, strict_checked=False).passed
    assert not replace(ordered, worst_gap=-1e-6).passed
