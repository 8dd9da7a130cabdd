from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from scipy.signal import hilbert

from weertman.errors import OperatorError
from weertman.grid import Grid, apply_symbol

RealFunction = Callable[[np.ndarray], np.ndarray]

NEAR_ZERO = 1e-3
PANEL_RATIO = 2.0


@dataclass(frozen=True)
class OperatorSample:
    grid: Grid
    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def apply_spectral(g: Grid, u: np.ndarray) -> np.ndarray:
    """|d/dx| of the 2L-periodic extension of ``u``: multiply by |k|."""
    return apply_symbol(g, np.abs(g.wavenumbers), g.check_length(u, "u"))


def sample_operator(g: Grid, u: np.ndarray) -> OperatorSample:
    return OperatorSample(grid=g, values=apply_spectral(g, u))


def spectral_derivative(g: Grid, u: np.ndarray) -> np.ndarray:
    """d/dx with the Nyquist mode dropped (its derivative is not real)."""
    symbol = 1j * np.asarray(g.wavenumbers)
    symbol[g.n_points // 2] = 0.0
    return apply_symbol(g, symbol, g.check_length(u, "u"))


def hilbert_of_derivative(g: Grid, u: np.ndarray) -> np.ndarray:
    """|d/dx| u computed as H{u'}; the Hilbert transform comes from the analytic signal.

    The Nyquist mode is lost on both steps, so this agrees with
    ``apply_spectral`` for inputs without Nyquist content.
    """
    derivative = spectral_derivative(g, u)
    return np.imag(hilbert(derivative))


def halflap_of_poisson(x: np.ndarray, a: float) -> np.ndarray:
    """Closed form of |d/dx| applied to a / (pi (a^2 + x^2))."""
    return (a**2 - x**2) / (math.pi * (a**2 + x**2) ** 2)


def _panels(R_int: float, quad_points: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    edges = [NEAR_ZERO]
    while edges[-1] < R_int:
        edges.append(min(edges[-1] * PANEL_RATIO, R_int))
    lo = np.asarray(edges[:-1])[:, None]
    hi = np.asarray(edges[1:])[:, None]
    half = 0.5 * (hi - lo)
    y = (lo + hi) * 0.5 + half * nodes[None, :]
    w = half * weights[None, :]
    return y.ravel(), w.ravel()


def oracle_tail_bound(sup_norm: float, R_int: float) -> float:
    """Bound on the part of the second-difference integral beyond R_int."""
    return 4.0 / math.pi * sup_norm / R_int


def oracle_pv(
    u: RealFunction,
    x: float,
    R_int: float = 1e4,
    quad_points: int = 32,
    limits: tuple[float, float] | None = None,
) -> float:
    """-(1/pi) int_0^R (u(x+y) - 2u(x) + u(x-y)) / y^2 dy by composite Gauss-Legendre.

    The integrand is bounded near y = 0 for C^2 functions; [0, NEAR_ZERO] is
    integrated with its endpoint value. When the limits of u at -inf and +inf
    are given, the tail beyond R_int is added assuming u has reached them.
    """
    if not R_int > NEAR_ZERO:
        raise OperatorError(f"R_int must exceed {NEAR_ZERO}, got {R_int}")
    center = float(u(np.asarray([x], dtype=float))[0])
    y, w = _panels(R_int, quad_points)
    plus = np.asarray(u(x + y), dtype=float)
    minus = np.asarray(u(x - y), dtype=float)
    if not (np.isfinite(center) and np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
        raise OperatorError(f"non-finite function values near x={x}")

    second = (plus - 2.0 * center + minus) / y**2
    integral = float(np.sum(w * second))

    edge = np.asarray([NEAR_ZERO], dtype=float)
    near = float(((u(x + edge) - 2.0 * center + u(x - edge)) / edge**2)[0])
    integral += NEAR_ZERO * near

    if limits is not None:
        left, right = limits
        integral += (left + right - 2.0 * center) / R_int
    return -integral / math.pi


def oracle_pv_derivative_form(
    du: RealFunction,
    x: float,
    R_int: float = 1e4,
    quad_points: int = 32,
) -> float:
    """-(1/pi) int_0^R (u'(x+y) - u'(x-y)) / y dy, the integrated-by-parts form."""
    if not R_int > NEAR_ZERO:
        raise OperatorError(f"R_int must exceed {NEAR_ZERO}, got {R_int}")
    y, w = _panels(R_int, quad_points)
    difference = np.asarray(du(x + y), dtype=float) - np.asarray(du(x - y), dtype=float)
    if not np.all(np.isfinite(difference)):
        raise OperatorError(f"non-finite derivative values near x={x}")
    integral = float(np.sum(w * difference / y))

    # (u'(x+y) - u'(x-y)) / y -> 2 u''(x) as y -> 0
    edge = np.asarray([NEAR_ZERO], dtype=float)
    near = float(((du(x + edge) - du(x - edge)) / edge)[0])
    integral += NEAR_ZERO * near
    return -integral / math.pi


def operator_check_table(
    g: Grid,
    u: RealFunction,
    n_probes: int = 41,
    fraction: float = 0.5,
    R_int: float = 1e4,
    quad_points: int = 32,
    limits: tuple[float, float] | None = None,
) -> pd.DataFrame:
    """Spectral |d/dx| against the singular-integral oracle at interior grid points."""
    spectral = apply_spectral(g, u(np.asarray(g.points)))
    interior = np.flatnonzero(g.interior_mask(fraction))
    picks = interior[np.unique(np.linspace(0, interior.size - 1, n_probes).round().astype(int))]
    rows = []
    for index in picks:
        x = float(g.points[index])
        oracle = oracle_pv(u, x, R_int=R_int, quad_points=quad_points, limits=limits)
        rows.append(
            {
                "x": x,
                "spectral": float(spectral[index]),
                "oracle": oracle,
                "abs_err": abs(float(spectral[index]) - oracle),
            }
        )
    return pd.DataFrame(rows, columns=["x", "spectral", "oracle", "abs_err"])
