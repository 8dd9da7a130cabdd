from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as fft

from weertman.errors import GridError


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic sampling of [-L, L) with its spectral wavenumbers.

    The transform pair is normalised as ``s_hat = h * fft(s)`` so that
    ``h * sum |s|^2 == (1 / 2L) * sum |s_hat|^2`` and a constant ``c`` maps to
    ``2L * c`` in the zero bin.
    """

    half_length: float
    n_points: int
    spacing: float = field(init=False)
    points: np.ndarray = field(init=False, repr=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        spacing = 2.0 * self.half_length / self.n_points
        points = -self.half_length + spacing * np.arange(self.n_points)
        wavenumbers = 2.0 * np.pi * fft.fftfreq(self.n_points, d=spacing)
        points.setflags(write=False)
        wavenumbers.setflags(write=False)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "wavenumbers", wavenumbers)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.half_length == other.half_length and self.n_points == other.n_points

    def __hash__(self) -> int:
        return hash((self.half_length, self.n_points))

    @property
    def L(self) -> float:
        return self.half_length

    @property
    def N(self) -> int:
        return self.n_points

    @property
    def h(self) -> float:
        return self.spacing

    @property
    def k_max(self) -> float:
        return np.pi * self.n_points / (2.0 * self.half_length)

    def interior_mask(self, fraction: float = 0.5, center: float = 0.0) -> np.ndarray:
        """Points with |x - center| <= fraction * L."""
        return np.abs(self.points - center) <= fraction * self.half_length + 1e-12

    def check_length(self, values: np.ndarray, name: str = "vector") -> np.ndarray:
        array = np.asarray(values)
        if array.ndim != 1 or array.shape[0] != self.n_points:
            raise GridError(
                f"{name} has length {array.shape[0] if array.ndim else 0}, expected {self.n_points}"
            )
        return array


def make_grid(L: float, N: int) -> Grid:
    if not np.isfinite(L) or L <= 0:
        raise GridError(f"L must be positive, got {L}")
    if int(N) != N:
        raise GridError(f"N must be an integer, got {N}")
    N = int(N)
    if N % 2 != 0:
        raise GridError(f"N must be even, got {N}")
    if N < 8:
        raise GridError(f"N must be at least 8, got {N}")
    return Grid(half_length=float(L), n_points=N)


def forward_transform(g: Grid, samples: np.ndarray) -> np.ndarray:
    values = g.check_length(samples, "samples")
    return g.spacing * fft.fft(np.asarray(values, dtype=float))


def inverse_transform(g: Grid, spectrum: np.ndarray) -> np.ndarray:
    values = g.check_length(spectrum, "spectrum")
    return fft.ifft(np.asarray(values, dtype=complex) / g.spacing).real


def apply_symbol(g: Grid, symbol: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Multiply the spectrum of ``samples`` by a real Fourier symbol."""
    return inverse_transform(g, symbol * forward_transform(g, samples))
