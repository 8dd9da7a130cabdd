from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from weertman.errors import BlowUpError, SemigroupError
from weertman.grid import Grid, apply_symbol, forward_transform, inverse_transform, make_grid

Rhs = Callable[[np.ndarray], np.ndarray]

# sharp constant in ||d/dx K_t||_L1 <= C / t
KERNEL_DERIVATIVE_CONSTANT = 2.0 / math.pi
SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class KernelSpec:
    """Poisson kernel at time t; t = 0 stands for the identity."""

    t: float

    def __post_init__(self) -> None:
        if not self.t >= 0:
            raise SemigroupError(f"kernel time must be nonnegative, got {self.t}")

    @property
    def is_identity(self) -> bool:
        return self.t == 0


def kernel_value(t: float, x: np.ndarray | float) -> np.ndarray | float:
    if not t > 0:
        raise SemigroupError(f"kernel_value needs t > 0, got {t}")
    return t / (math.pi * (t**2 + np.square(x)))


def kernel_derivative(t: float, x: np.ndarray | float) -> np.ndarray | float:
    if not t > 0:
        raise SemigroupError(f"kernel_derivative needs t > 0, got {t}")
    return -2.0 * t * np.asarray(x) / (math.pi * (t**2 + np.square(x)) ** 2)


def discrete_kernel_mass(t: float, span: float = 1000.0, n_points: int = 2**14) -> float:
    """Riemann sum of K_t over a grid of half-length span * t.

    The tails beyond the grid carry 1 - (2/pi) arctan(span), so the sum falls
    short of 1 by about 2 / (pi span).
    """
    if not t > 0:
        raise SemigroupError(f"discrete_kernel_mass needs t > 0, got {t}")
    g = make_grid(span * t, n_points)
    return g.spacing * float(np.sum(kernel_value(t, np.asarray(g.points))))


def periodized_kernel(t: float, x: np.ndarray | float, half_length: float) -> np.ndarray | float:
    """sum_m K_t(x + 2Lm) in closed form."""
    if not t > 0:
        raise SemigroupError(f"periodized_kernel needs t > 0, got {t}")
    scale = math.pi / half_length
    return math.sinh(scale * t) / (
        2.0 * half_length * (math.cosh(scale * t) - np.cos(scale * np.asarray(x)))
    )


def propagate(g: Grid, t: float, u: np.ndarray) -> np.ndarray:
    """Solution at time t of the homogeneous equation d_t u + |d_x| u = 0."""
    if not t >= 0:
        raise SemigroupError(f"propagate needs t >= 0, got {t}")
    values = np.asarray(g.check_length(u, "u"), dtype=float)
    if t == 0:
        return values.copy()
    return apply_symbol(g, np.exp(-np.abs(g.wavenumbers) * t), values)


def convolve_periodized(g: Grid, t: float, u: np.ndarray) -> np.ndarray:
    """h * sum_j K_per(x_i - x_j) u_j, the periodic convolution with the periodized kernel."""
    offsets = g.spacing * np.arange(g.n_points)
    kernel = periodized_kernel(t, offsets, g.half_length)
    return inverse_transform(g, forward_transform(g, kernel) * forward_transform(g, u))


def kernel_derivative_l1(t: float) -> float:
    if not t > 0:
        raise SemigroupError(f"kernel_derivative_l1 needs t > 0, got {t}")
    value = 2.0 / (math.pi * t)
    if value > KERNEL_DERIVATIVE_CONSTANT / t * (1.0 + 1e-12):
        raise SemigroupError(f"derivative bound C / t violated at t={t}")
    return value


def kernel_derivative_l1_quadrature(t: float) -> float:
    if not t > 0:
        raise SemigroupError(f"kernel_derivative_l1_quadrature needs t > 0, got {t}")
    # |d/dx K_t| is even; split at the maximum x = t / sqrt(3)
    peak = t / math.sqrt(3.0)

    def integrand(x: float) -> float:
        return abs(float(kernel_derivative(t, x)))

    head, _ = quad(integrand, 0.0, peak, epsabs=1e-14, epsrel=1e-12, limit=200)
    tail, _ = quad(integrand, peak, math.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return 2.0 * (head + tail)


def phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1) / z, with phi1(0) = 1."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2.0 + z**2 / 6.0 + z**3 / 24.0, np.expm1(safe) / safe)


def phi2(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z) / z^2, with phi2(0) = 1/2."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    safe = np.where(small, 1.0, z)
    return np.where(
        small,
        0.5 + z / 6.0 + z**2 / 24.0 + z**3 / 120.0,
        (np.expm1(safe) - safe) / safe**2,
    )


class ETDStepper:
    """Exponential time differencing for d_t v = -|d_x| v + g(v) on a fixed grid and step.

    Order 1 holds g constant over the step (discrete Duhamel formula); order 2
    is the predictor-corrector that also uses phi2 for a linear-in-time g.
    """

    def __init__(self, grid: Grid, dt: float, order: int = 2) -> None:
        if not dt > 0:
            raise SemigroupError(f"dt must be positive, got {dt}")
        if order not in (1, 2):
            raise SemigroupError(f"order must be 1 or 2, got {order}")
        self.grid = grid
        self.dt = dt
        self.order = order
        z = -np.abs(grid.wavenumbers) * dt
        self.decay = np.exp(z)
        self.coeff1 = dt * phi1(z)
        self.coeff2 = dt * phi2(z)

    def _forcing(self, rhs: Rhs, v: np.ndarray, t: float) -> np.ndarray:
        values = np.asarray(rhs(v), dtype=float)
        if not np.all(np.isfinite(values)):
            raise BlowUpError(f"non-finite right-hand side at t={t:.6g}", last_finite_time=t)
        return forward_transform(self.grid, values)

    def step(self, v: np.ndarray, rhs: Rhs, t: float = 0.0) -> np.ndarray:
        g = self.grid
        v_hat = forward_transform(g, g.check_length(v, "v"))
        n_v = self._forcing(rhs, v, t)
        a_hat = self.decay * v_hat + self.coeff1 * n_v
        if self.order == 1:
            result = inverse_transform(g, a_hat)
        else:
            a = inverse_transform(g, a_hat)
            n_a = self._forcing(rhs, a, t + self.dt)
            result = inverse_transform(g, a_hat + self.coeff2 * (n_a - n_v))
        if not np.all(np.isfinite(result)):
            raise BlowUpError(f"non-finite state after step from t={t:.6g}", last_finite_time=t)
        return result


def duhamel_step(
    g: Grid,
    dt: float,
    v: np.ndarray,
    rhs: Rhs,
    order: int = 1,
    t: float = 0.0,
) -> np.ndarray:
    return ETDStepper(g, dt, order).step(v, rhs, t)
