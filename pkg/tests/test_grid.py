import math

import numpy as np
import pytest

from weertman.errors import GridError
from weertman.grid import apply_symbol, forward_transform, inverse_transform, make_grid


def test_desk_scale_grid():
    g = make_grid(200.0, 8192)
    assert g.h == pytest.approx(0.048828125, abs=1e-15)
    assert g.points[0] == -200.0
    assert g.points[-1] == pytest.approx(200.0 - g.h)
    assert g.k_max == pytest.approx(math.pi * 8192 / 400.0)
    assert np.max(np.abs(g.wavenumbers)) == pytest.approx(g.k_max)


def test_non_power_of_two_is_allowed():
    g = make_grid(50.0, 1000)
    assert g.N == 1000
    assert g.points[500] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    ("L", "N", "message"),
    [(0.0, 64, "L must be positive"), (-1.0, 64, "L must be positive"), (10.0, 63, "N must be even"), (10.0, 6, "at least 8")],
)
def test_invalid_grids(L, N, message):
    with pytest.raises(GridError, match=message):
        make_grid(L, N)


def test_round_trip_and_parseval():
    g = make_grid(30.0, 256)
    u = np.random.default_rng(3).standard_normal(g.N)
    spectrum = forward_transform(g, u)
    np.testing.assert_allclose(inverse_transform(g, spectrum), u, atol=1e-12)
    assert g.h * np.sum(u**2) == pytest.approx(np.sum(np.abs(spectrum) ** 2) / (2.0 * g.L), rel=1e-12)


def test_constant_lands_in_zero_bin():
    g = make_grid(30.0, 128)
    spectrum = forward_transform(g, np.full(g.N, 0.25))
    assert spectrum[0].real == pytest.approx(2.0 * g.L * 0.25)
    assert np.max(np.abs(spectrum[1:])) < 1e-12


def test_symbol_of_ones_is_identity():
    g = make_grid(10.0, 64)
    u = np.sin(np.pi * g.points / g.L)
    np.testing.assert_allclose(apply_symbol(g, np.ones(g.N), u), u, atol=1e-14)


def test_grids_compare_by_size():
    assert make_grid(10.0, 64) == make_grid(10.0, 64)
    assert make_grid(10.0, 64) != make_grid(10.0, 128)
    assert len({make_grid(10.0, 64), make_grid(10.0, 64)}) == 1


def test_length_mismatch():
    g = make_grid(10.0, 64)
    with pytest.raises(GridError, match="expected 64"):
        forward_transform(g, np.zeros(32))
    with pytest.raises(ValueError):
        g.points[0] = 1.0


def test_cosine_occupies_two_bins():
    g = make_grid(25.0, 128)
    spectrum = forward_transform(g, np.cos(np.pi * g.points / g.L))
    magnitudes = np.abs(spectrum)
    assert magnitudes[1] == pytest.approx(g.L, rel=1e-12)
    assert magnitudes[-1] == pytest.approx(g.L, rel=1e-12)
    assert np.max(magnitudes[2:-1]) < 1e-10
    assert magnitudes[0] < 1e-10
    assert g.wavenumbers[1] == pytest.approx(np.pi / g.L)
