from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar
from scipy.stats import linregress

from weertman.errors import AnalysisError
from weertman.evolution import (
    ReferenceProfile,
    RunReport,
    WaveState,
    front_position,
    is_monotone,
    profile_derivative,
    profile_halflap,
)
from weertman.grid import Grid, apply_symbol, forward_transform, inverse_transform
from weertman.potential import BistablePotential

MIN_TRACKING_SAMPLES = 10
TAIL_FLOOR = 1e-12
RATE_WINDOW = (1e-6, 1e-2)
RATE_ADMISSIBLE = (1e-8, 1e-1)
RATE_MIN_SAMPLES = 20
RATE_MIN_WINDOW = 10
DEFAULT_RADII = (10.0, 20.0, 40.0, 60.0, 80.0, 100.0)


@dataclass(frozen=True)
class TailFit:
    prefactor: float
    exponent: float
    r_squared: float
    window: tuple[float, float]


@dataclass(frozen=True)
class RateFit:
    K: float
    kappa: float
    r_squared: float
    window: tuple[float, float]
    decades: float
    n_points: int


@dataclass
class TravelingWave:
    grid: Grid
    ref: ReferenceProfile
    v: np.ndarray
    c: float = 0.0
    xi: float = 0.0
    tail_left: TailFit | None = None
    tail_right: TailFit | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def eta(self) -> np.ndarray:
        return self.ref.values(self.grid.points) + self.v

    @property
    def derivative(self) -> np.ndarray:
        return profile_derivative(self.grid, self.ref, self.v)

    @property
    def halflap(self) -> np.ndarray:
        return profile_halflap(self.grid, self.ref, self.v)

    def second_derivative(self) -> np.ndarray:
        g = self.grid
        symbol = -np.square(g.wavenumbers)
        return self.ref.second_derivative(g.points) + apply_symbol(g, symbol, self.v)

    def end_constant(self) -> float:
        """B with |eta(-L) - eta_l| and |eta(L - h) - eta_r| at most B / L."""
        eta = self.eta
        gap = max(abs(eta[0] - self.ref.eta_l), abs(eta[-1] - self.ref.eta_r))
        return float(gap * self.grid.half_length)


def traveling_wave(state: WaveState, c: float = 0.0) -> TravelingWave:
    level = 0.5 * (state.ref.eta_l + state.ref.eta_r)
    xi = front_position(state.grid, state.u, level)
    wave = TravelingWave(
        grid=state.grid,
        ref=state.ref,
        v=np.asarray(state.v, dtype=float).copy(),
        c=c,
        xi=0.0 if math.isnan(xi) else xi,
    )
    if not is_monotone(wave.eta):
        wave.notes.append("profile is not monotone within 1e-8")
    return wave


class ShiftedProfile:
    """eta(x - s) on the grid for real s: psi is shifted exactly, v by a Fourier phase."""

    def __init__(self, wave: TravelingWave) -> None:
        self.wave = wave
        g = wave.grid
        self.v_hat = forward_transform(g, wave.v)
        self.k = np.asarray(g.wavenumbers)
        self.nyquist = g.n_points // 2

    def _shift_symbol(self, shift: float) -> np.ndarray:
        symbol = np.exp(-1j * self.k * shift)
        symbol[self.nyquist] = math.cos(self.k[self.nyquist] * shift)
        return symbol

    def values(self, shift: float) -> np.ndarray:
        g = self.wave.grid
        ref = self.wave.ref.recentered(self.wave.ref.center + shift)
        return ref.values(g.points) + inverse_transform(g, self._shift_symbol(shift) * self.v_hat)

    def fields(self, shift: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(eta, eta', |d_x| eta) evaluated at x - shift."""
        g = self.wave.grid
        ref = self.wave.ref.recentered(self.wave.ref.center + shift)
        shifted_hat = self._shift_symbol(shift) * self.v_hat
        v = inverse_transform(g, shifted_hat)
        derivative_symbol = 1j * self.k
        derivative_symbol[self.nyquist] = 0.0
        dv = inverse_transform(g, derivative_symbol * shifted_hat)
        hv = inverse_transform(g, np.abs(self.k) * shifted_hat)
        x = g.points
        return ref.values(x) + v, ref.derivative(x) + dv, ref.halflap(x) + hv


def shift_profile(w: TravelingWave, xi: float) -> np.ndarray:
    return ShiftedProfile(w).values(xi)


def shift_distance(
    u: np.ndarray,
    w: TravelingWave,
    fraction: float = 0.5,
    shifted: ShiftedProfile | None = None,
) -> tuple[float, float]:
    """min over real shifts s of sup_{|x| <= fraction L} |u - eta(. - s)|; returns (d, s)."""
    g = w.grid
    profile = shifted or ShiftedProfile(w)
    mask = g.interior_mask(fraction)
    level = 0.5 * (w.ref.eta_l + w.ref.eta_r)
    guess = front_position(g, u, level) - w.xi
    if math.isnan(guess):
        guess = 0.0
    span = max(8.0 * g.spacing, 1.0)

    def objective(shift: float) -> float:
        return float(np.max(np.abs(u[mask] - profile.values(shift)[mask])))

    result = minimize_scalar(
        objective,
        bounds=(guess - span, guess + span),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(result.fun), float(result.x)


def distance_series(report: RunReport, w: TravelingWave, fraction: float = 0.5) -> list[float]:
    if not report.snapshots:
        raise AnalysisError("run report holds no profile snapshots")
    profile = ShiftedProfile(w)
    return [shift_distance(u, w, fraction, profile)[0] for u in report.snapshots]


def measure_velocity_tracking(report: RunReport, min_samples: int = MIN_TRACKING_SAMPLES) -> float:
    times = np.asarray(report.times, dtype=float)
    fronts = np.asarray(report.fronts, dtype=float)
    if times.size == 0:
        raise AnalysisError("need at least 10 front samples, got 0")
    keep = (times >= times[0] + 0.5 * (times[-1] - times[0])) & np.isfinite(fronts)
    if int(np.count_nonzero(keep)) < min_samples:
        raise AnalysisError(
            f"need at least {min_samples} front samples in the last half, got {int(np.count_nonzero(keep))}"
        )
    slope, _ = np.polyfit(times[keep], fronts[keep], 1)
    return float(slope)


def velocity_identity_energy(w: TravelingWave, p: BistablePotential) -> float:
    """c = [F(eta_r) - F(eta_l)] / int |eta'|^2."""
    if not is_monotone(w.eta):
        w.notes.append("energy identity evaluated on a non-monotone profile")
    denominator = float(w.grid.spacing * np.sum(np.square(w.derivative)))
    if denominator <= 0:
        raise AnalysisError("int |eta'|^2 vanishes; the profile is flat")
    return p.energy_gap / denominator


def truncated_integrals(
    w: TravelingWave,
    p: BistablePotential,
    radii: Sequence[float],
) -> np.ndarray:
    g = w.grid
    x = np.asarray(g.points)
    values = np.asarray(p.F1(w.eta), dtype=float)
    out = []
    for radius in radii:
        lo, hi = w.xi - radius, w.xi + radius
        inside = (x > lo) & (x < hi)
        nodes = np.concatenate(([lo], x[inside], [hi]))
        samples = np.concatenate(
            ([np.interp(lo, x, values)], values[inside], [np.interp(hi, x, values)])
        )
        out.append(trapezoid(samples, nodes))
    return np.asarray(out) / p.jump


def velocity_identity_integral(
    w: TravelingWave,
    p: BistablePotential,
    radii: Sequence[float] = DEFAULT_RADII,
) -> float:
    """(1 / (eta_r - eta_l)) lim_R int_{-R}^{R} F'(eta), extrapolated from value(R) = c + b / R.

    F'(eta) is not integrable; the symmetric truncation cancels its matched 1/x tails.
    """
    radii_array = np.asarray(radii, dtype=float)
    if radii_array.size < 2:
        raise AnalysisError("need at least two radii")
    if np.any(np.diff(radii_array) <= 0):
        raise AnalysisError(f"radii must be strictly increasing, got {list(radii)}")
    if radii_array[-1] > w.grid.half_length / 2.0 + 1e-12:
        raise AnalysisError(f"radii must not exceed L/2 = {w.grid.half_length / 2.0}")
    values = truncated_integrals(w, p, radii_array)
    design = np.column_stack([np.ones_like(radii_array), 1.0 / radii_array])
    (c, _), *_ = np.linalg.lstsq(design, values, rcond=None)
    return float(c)


def predicted_tail_prefactor(p: BistablePotential, side: str) -> float:
    """|eta_l - eta_r| / (pi F''(well)) for the 1/|x| tail on the given side."""
    well = p.eta_r if side == "right" else p.eta_l
    return abs(p.jump) / (math.pi * float(p.F2(well)))


def _side_window(w: TravelingWave, side: str, window: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    if side not in ("left", "right"):
        raise AnalysisError(f"side must be 'left' or 'right', got {side!r}")
    x_lo, x_hi = window
    if x_lo < 10 or x_hi <= x_lo:
        raise AnalysisError(f"tail window must satisfy 10 <= x_lo < x_hi, got {window}")
    offsets = (np.asarray(w.grid.points) - w.xi) * (1.0 if side == "right" else -1.0)
    mask = (offsets >= x_lo) & (offsets <= x_hi)
    if np.count_nonzero(mask) < 3:
        raise AnalysisError(f"tail window {window} holds fewer than 3 grid points")
    if x_hi > w.grid.half_length - abs(w.xi) - w.grid.spacing:
        raise AnalysisError(f"tail window {window} leaves the grid interior")
    return offsets, mask


def fit_tail(
    w: TravelingWave,
    p: BistablePotential,
    side: str,
    window: tuple[float, float] = (20.0, 80.0),
) -> TailFit:
    offsets, mask = _side_window(w, side, window)
    well = p.eta_r if side == "right" else p.eta_l
    gap = np.abs(w.eta[mask] - well)
    if np.any(gap < TAIL_FLOOR):
        raise AnalysisError(f"window too far: |eta - well| drops below {TAIL_FLOOR}")
    fit = linregress(np.log(offsets[mask]), np.log(gap))
    result = TailFit(
        prefactor=float(math.exp(fit.intercept)),
        exponent=float(fit.slope),
        r_squared=float(fit.rvalue**2),
        window=(float(window[0]), float(window[1])),
    )
    if side == "right":
        w.tail_right = result
    else:
        w.tail_left = result
    return result


def derivative_bounds(
    w: TravelingWave,
    side: str = "right",
    window: tuple[float, float] = (10.0, 80.0),
) -> tuple[float, float]:
    """Tightest (A, B) with A x^-2 <= eta'(x) <= B x^-2 on the window."""
    offsets, mask = _side_window(w, side, window)
    scaled = w.derivative[mask] * offsets[mask] ** 2
    return float(np.min(scaled)), float(np.max(scaled))


def second_derivative_decay(
    w: TravelingWave,
    side: str = "right",
    window: tuple[float, float] = (20.0, 80.0),
) -> TailFit:
    """Power-law fit of |eta''| on the window."""
    offsets, mask = _side_window(w, side, window)
    curvature = np.abs(w.second_derivative()[mask])
    if np.any(curvature < TAIL_FLOOR):
        raise AnalysisError(f"window too far: |eta''| drops below {TAIL_FLOOR}")
    fit = linregress(np.log(offsets[mask]), np.log(curvature))
    return TailFit(
        prefactor=float(math.exp(fit.intercept)),
        exponent=float(fit.slope),
        r_squared=float(fit.rvalue**2),
        window=(float(window[0]), float(window[1])),
    )


def fit_convergence_rate(
    times: Sequence[float],
    distances: Sequence[float],
    window: tuple[float, float] = RATE_WINDOW,
    min_points: int = RATE_MIN_WINDOW,
) -> RateFit:
    """Fit d(t) = K exp(-kappa t) on the longest stretch with d inside ``window``."""
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    if t.shape != d.shape:
        raise AnalysisError("times and distances differ in length")
    admissible = np.count_nonzero((d >= RATE_ADMISSIBLE[0]) & (d <= RATE_ADMISSIBLE[1]))
    if admissible < RATE_MIN_SAMPLES:
        raise AnalysisError(
            f"no exponential regime found: only {admissible} samples with d in {RATE_ADMISSIBLE}"
        )

    inside = (d >= window[0]) & (d <= window[1])
    best: tuple[int, int] | None = None
    start = None
    for index, flag in enumerate(np.append(inside, False)):
        if flag and start is None:
            start = index
        elif not flag and start is not None:
            if best is None or index - start > best[1] - best[0]:
                best = (start, index)
            start = None
    if best is None or best[1] - best[0] < min_points:
        raise AnalysisError(f"no exponential regime found: no window with {min_points} points in {window}")

    sl = slice(*best)
    fit = linregress(t[sl], np.log(d[sl]))
    kappa = -float(fit.slope)
    if not kappa > 0:
        raise AnalysisError(f"no exponential regime found: fitted rate {kappa:.3e} is not positive")
    return RateFit(
        K=float(math.exp(fit.intercept)),
        kappa=kappa,
        r_squared=float(fit.rvalue**2),
        window=(float(t[sl][0]), float(t[sl][-1])),
        decades=float(math.log10(np.max(d[sl]) / np.min(d[sl]))),
        n_points=best[1] - best[0],
    )


def analysis_summary(
    c_tracking: float,
    c_idc1: float,
    c_idc2: float,
    w: TravelingWave,
    rate: RateFit | None,
) -> dict[str, Any]:
    def tail(fit: TailFit | None, key: str) -> dict[str, float]:
        if fit is None:
            return {f"{key}_prefactor": float("nan"), f"{key}_exponent": float("nan")}
        return {f"{key}_prefactor": fit.prefactor, f"{key}_exponent": fit.exponent}

    summary: dict[str, Any] = {
        "c_tracking": c_tracking,
        "c_idc1": c_idc1,
        "c_idc2": c_idc2,
        "xi": w.xi,
        **tail(w.tail_left, "tail_left"),
        **tail(w.tail_right, "tail_right"),
        "K": rate.K if rate else float("nan"),
        "kappa": rate.kappa if rate else float("nan"),
        "r2": rate.r_squared if rate else float("nan"),
    }
    return summary
