from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from weertman.errors import SqueezeError
from weertman.evolution import (
    EvolveConfig,
    WaveState,
    advance,
    is_monotone,
    make_initial,
    weertman_residual,
)
from weertman.grid import Grid, forward_transform
from weertman.potential import BistablePotential, sup_curvature, well_curvature
from weertman.semigroup import ETDStepper
from weertman.wave_analysis import ShiftedProfile, TravelingWave

LogCallback = Callable[[str], None]

COMPARISON_TOL = 1e-9
RESIDUAL_FACTOR = 10.0
OUTER_FRACTION = 0.9


@dataclass(frozen=True)
class SqueezeParams:
    beta: float
    sigma: float
    delta: float
    l: float
    R0: float
    delta1: float
    sigma_uncapped: float
    capped: bool

    @property
    def sigma_exceeds_one(self) -> bool:
        return self.sigma_uncapped > 1.0


@dataclass
class SubSuperReport:
    tolerance: float
    profile_residual: float
    worst: float
    samples: pd.DataFrame
    violations: pd.DataFrame

    @property
    def passed(self) -> bool:
        return self.violations.empty

    def as_dict(self) -> dict[str, Any]:
        return {
            "subsuper_passed": self.passed,
            "subsuper_worst": self.worst,
            "subsuper_tolerance": self.tolerance,
            "subsuper_violations": int(len(self.violations)),
        }


@dataclass
class ComparisonReport:
    tolerance: float
    worst_gap: float
    worst_t: float
    worst_x: float
    strict_checked: bool
    strict_gap: float = float("nan")
    gaps: list[dict[str, float]] = field(default_factory=list)

    @property
    def ordered(self) -> bool:
        return self.worst_gap >= -self.tolerance

    @property
    def passed(self) -> bool:
        return self.ordered and (not self.strict_checked or self.strict_gap > 0)


@dataclass
class SandwichReport:
    tolerance: float
    worst_lower: float
    worst_upper: float
    times: list[float]

    @property
    def passed(self) -> bool:
        return self.worst_lower >= -self.tolerance and self.worst_upper >= -self.tolerance

    def as_dict(self) -> dict[str, Any]:
        return {
            "sandwich_passed": self.passed,
            "sandwich_worst_lower": self.worst_lower,
            "sandwich_worst_upper": self.worst_upper,
        }


def _proximity_radius(w: TravelingWave, threshold: float) -> float:
    """Smallest R with |eta - eta_l| < threshold left of xi - R and |eta - eta_r| < threshold right of xi + R."""
    x = np.asarray(w.grid.points)
    eta = w.eta
    radius = 0.0
    for side, well in ((1.0, w.ref.eta_r), (-1.0, w.ref.eta_l)):
        offsets = side * (x - w.xi)
        gap = np.abs(eta - well)
        outside = np.flatnonzero((offsets > 0) & (gap >= threshold))
        if outside.size == 0:
            continue
        # last grid point still too far from the well, then interpolate to the next one
        index = outside[np.argmax(offsets[outside])]
        neighbour = index + (1 if side > 0 else -1)
        if neighbour < 0 or neighbour >= x.size:
            raise SqueezeError("profile never enters the well neighbourhood inside the grid")
        g0, g1 = gap[index], gap[neighbour]
        fraction = (g0 - threshold) / (g0 - g1) if g0 != g1 else 0.0
        radius = max(radius, float(offsets[index] + fraction * (offsets[neighbour] - offsets[index])))
    return radius


def compute_squeeze_params(
    p: BistablePotential,
    w: TravelingWave,
    delta1: float,
    delta: float | None = None,
    l: float = 0.0,
    cap_sigma: bool = True,
    logger: LogCallback | None = None,
) -> SqueezeParams:
    """Constants (beta, sigma, delta, l, R0) of the sub/super-solution pair w_{+-1}.

    beta is the curvature floor of F on the delta0-neighbourhoods of the wells, R0
    the radius outside of which eta sits within (delta0 - delta1)/2 of its limits,
    and sigma = (sup|F''| + beta) / (beta inf_{|y|<R0} eta'(y)).

    With that sigma the residual sign holds everywhere: outside the core the well
    curvature beats the delta e^{-beta t} lift, and inside the core the shift term
    sigma delta beta e^{-beta t} eta' has to dominate |F''| delta e^{-beta t} plus the
    same lift, which is exactly what the quotient above buys. For steep fronts sigma
    is large (about 1.1e3 for the sinusoidal potential at A=1). Capping it at 1
    (cap_sigma=True) keeps the fronts close together but gives up the core sign, so
    verify_subsuper_residual reports violations there.
    """
    log = logger or (lambda message: None)
    if not 0 < delta1 < p.delta0:
        raise SqueezeError(f"delta1 must lie in (0, delta0={p.delta0}), got {delta1}")
    delta = 0.5 * delta1 if delta is None else delta
    if not 0 < delta < delta1:
        raise SqueezeError(f"delta must lie in (0, delta1={delta1}), got {delta}")
    if not is_monotone(w.eta):
        raise SqueezeError("traveling wave profile is not monotone")

    beta = well_curvature(p)
    if not beta > 0:
        raise SqueezeError(f"well curvature floor must be positive, got {beta}")
    R0 = _proximity_radius(w, 0.5 * (p.delta0 - delta1))

    core = np.abs(np.asarray(w.grid.points) - w.xi) < R0
    if not np.any(core):
        core = np.abs(np.asarray(w.grid.points) - w.xi) <= w.grid.spacing
    slope_floor = float(np.min(w.derivative[core]))
    if not slope_floor > 0:
        raise SqueezeError(f"eta' must be positive on |y| < R0, got inf {slope_floor:.3e}")

    sigma_uncapped = (sup_curvature(p) + beta) / (beta * slope_floor)
    sigma = min(sigma_uncapped, 1.0) if cap_sigma else sigma_uncapped
    if sigma_uncapped > 1.0:
        log(f"sigma formula gives {sigma_uncapped:.6g} > 1; using sigma={sigma:.6g}")
    log(f"squeeze params: beta={beta:.6g} R0={R0:.6g} inf eta'={slope_floor:.6g}")
    return SqueezeParams(
        beta=beta,
        sigma=sigma,
        delta=float(delta),
        l=float(l),
        R0=R0,
        delta1=float(delta1),
        sigma_uncapped=float(sigma_uncapped),
        capped=cap_sigma,
    )


def _zeta_shift(w: TravelingWave, sp: SqueezeParams, i: int, t: float) -> float:
    """s with zeta_i(t, x) = x - s."""
    return w.c * t - i * sp.l - i * sp.sigma * sp.delta * (1.0 - math.exp(-sp.beta * t))


class WaveInterpolant:
    """eta at arbitrary points: band-limited inside the grid, fitted 1/x tails outside."""

    def __init__(self, w: TravelingWave) -> None:
        g = w.grid
        self.w = w
        self.coefficients = forward_transform(g, w.v) / (2.0 * g.half_length)
        self.k = np.asarray(g.wavenumbers)
        self.nyquist = g.n_points // 2
        self.limit = OUTER_FRACTION * g.half_length

    def _interior(self, z: np.ndarray) -> np.ndarray:
        g = self.w.grid
        phases = np.exp(1j * np.outer(z + g.half_length, self.k))
        phases[:, self.nyquist] = np.cos(self.k[self.nyquist] * (z + g.half_length))
        return self.w.ref.values(z) + (phases @ self.coefficients).real

    def __call__(self, z: np.ndarray | float) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty_like(z)
        offsets = z - self.w.xi
        inside = np.abs(offsets) <= self.limit
        if np.any(inside):
            out[inside] = self._interior(z[inside])
        right = offsets > self.limit
        left = offsets < -self.limit
        if np.any(right):
            out[right] = self._tail(z[right], offsets[right], "right")
        if np.any(left):
            out[left] = self._tail(z[left], offsets[left], "left")
        return out

    def _tail(self, z: np.ndarray, offsets: np.ndarray, side: str) -> np.ndarray:
        fit = self.w.tail_right if side == "right" else self.w.tail_left
        if fit is None:
            return self.w.ref.values(z)
        if side == "right":
            return self.w.ref.eta_r - fit.prefactor * offsets**fit.exponent
        return self.w.ref.eta_l + fit.prefactor * (-offsets) ** fit.exponent


def build_subsuper(
    w: TravelingWave,
    sp: SqueezeParams,
    i: int,
    t: float,
    x: np.ndarray | float,
    interpolant: WaveInterpolant | None = None,
) -> np.ndarray:
    """w_i(t, x) = eta(zeta_i(t, x)) + i delta e^{-beta t}."""
    if i not in (-1, 1):
        raise SqueezeError(f"i must be -1 or +1, got {i}")
    eta = interpolant or WaveInterpolant(w)
    zeta = np.asarray(x, dtype=float) - _zeta_shift(w, sp, i, t)
    return eta(zeta) + i * sp.delta * math.exp(-sp.beta * t)


def subsuper_on_grid(w: TravelingWave, sp: SqueezeParams, i: int, t: float, profile: ShiftedProfile) -> np.ndarray:
    return profile.values(_zeta_shift(w, sp, i, t)) + i * sp.delta * math.exp(-sp.beta * t)


def squeezed_data(w: TravelingWave, sp: SqueezeParams, wiggle: float = 0.4) -> np.ndarray:
    """Initial data strictly between w_{-1}(0, .) and w_{+1}(0, .) that is not a translate of eta."""
    if not 0 <= wiggle < 0.5:
        raise SqueezeError(f"wiggle must lie in [0, 0.5), got {wiggle}")
    profile = ShiftedProfile(w)
    lower = subsuper_on_grid(w, sp, -1, 0.0, profile)
    upper = subsuper_on_grid(w, sp, 1, 0.0, profile)
    return 0.5 * (lower + upper) + wiggle * (upper - lower) * np.sin(np.asarray(w.grid.points))


def verify_subsuper_residual(
    p: BistablePotential,
    w: TravelingWave,
    sp: SqueezeParams,
    sample_times: Sequence[float],
    sample_points: Sequence[float],
    tolerance: float | None = None,
    ceiling: float | None = None,
) -> SubSuperReport:
    """Sample i [(d_t + |d_x|) w_i + F'(w_i)] and require it to be >= -tolerance.

    Without an explicit tolerance the slack follows the wave itself,
    RESIDUAL_FACTOR times its steady-equation residual, clipped to ceiling.
    """
    g = w.grid
    x = np.asarray(g.points)
    points = np.asarray(sample_points, dtype=float)
    profile_residual = weertman_residual(g, p, w.ref, w.v, w.c, center=w.xi).value
    if tolerance is not None:
        tol = tolerance
    else:
        tol = RESIDUAL_FACTOR * profile_residual
        if ceiling is not None:
            tol = min(tol, ceiling)
    profile = ShiftedProfile(w)

    rows = []
    for i in (-1, 1):
        for t in sample_times:
            decay = math.exp(-sp.beta * t)
            eta, slope, halflap = profile.fields(_zeta_shift(w, sp, i, t))
            value_w = eta + i * sp.delta * decay
            d_t = slope * (-w.c + i * sp.sigma * sp.delta * sp.beta * decay) - i * sp.delta * sp.beta * decay
            pre = d_t + halflap + np.asarray(p.F1(value_w), dtype=float)
            sampled = np.interp(points, x, pre)
            for xp, value in zip(points, sampled):
                rows.append({"i": i, "t": float(t), "x": float(xp), "pre": float(value), "value": float(i * value)})

    samples = pd.DataFrame(rows, columns=["i", "t", "x", "pre", "value"])
    violations = samples[samples["value"] < -tol].reset_index(drop=True)
    return SubSuperReport(
        tolerance=float(tol),
        profile_residual=float(profile_residual),
        worst=float(samples["value"].min()) if not samples.empty else float("nan"),
        samples=samples,
        violations=violations,
    )


def _evolution_state(g: Grid, p: BistablePotential, u0: np.ndarray) -> WaveState:
    return make_initial(g, p, kind="custom", samples=u0, check_limits=False)


def verify_comparison(
    p: BistablePotential,
    g: Grid,
    u0_low: np.ndarray,
    u0_high: np.ndarray,
    cfg: EvolveConfig,
    times: Sequence[float],
    tolerance: float = COMPARISON_TOL,
    logger: LogCallback | None = None,
) -> ComparisonReport:
    """Evolve two ordered data and track min(u_high - u_low) over the whole grid.

    When the data differ on a set of positive measure inside [0, 1] the strict
    order u_high > u_low is also required at t = 1, again over every grid point.
    """
    log = logger or (lambda message: None)
    low =np.asarray(g.check_length(u0_low, "u0_low"), dtype=float)
    high = np.asarray(g.check_length(u0_high, "u0_high"), dtype=float)
    if np.any(low > high):
        raise SqueezeError("u0_low must not exceed u0_high")

    x = np.asarray(g.points)
    unit = (x >= 0.0) & (x <= 1.0)
    strict = bool(g.spacing * np.sum((high - low)[unit]) > 1e-12)
    sample_times = sorted(set(float(t) for t in times) | ({1.0} if strict else set()))

    stepper = ETDStepper(g, cfg.dt, cfg.order)
    state_low = _evolution_state(g, p, low)
    state_high = _evolution_state(g, p, high)
    report = ComparisonReport(
        tolerance=tolerance,
        worst_gap=float(np.min(high - low)),
        worst_t=0.0,
        worst_x=float(x[int(np.argmin(high - low))]),
        strict_checked=strict,
    )
    for t in sample_times:
        state_low = advance(state_low, p, cfg, t, stepper)
        state_high = advance(state_high, p, cfg, t, stepper)
        gap = state_high.u - state_low.u
        worst = int(np.argmin(gap))
        report.gaps.append({"t": t, "min_gap": float(gap[worst]), "x": float(x[worst])})
        if gap[worst] < report.worst_gap:
            report.worst_gap, report.worst_t, report.worst_x = float(gap[worst]), t, float(x[worst])
        if strict and t == 1.0:
            report.strict_gap = float(gap[worst])
        log(f"comparison t={t:.6g}: min gap {gap[worst]:.3e} at x={x[worst]:.6g}")
    return report


def verify_sandwich(
    p: BistablePotential,
    w: TravelingWave,
    sp: SqueezeParams,
    cfg: EvolveConfig,
    times: Sequence[float],
    u0: np.ndarray | None = None,
    tolerance: float = 1e-6,
    fraction: float = 0.5,
) -> SandwichReport:
    """Evolve data squeezed between w_{-1}(0, .) and w_{+1}(0, .) and check it stays squeezed."""
    g = w.grid
    profile = ShiftedProfile(w)
    start = w.eta if u0 is None else np.asarray(g.check_length(u0, "u0"), dtype=float)
    lower0 = subsuper_on_grid(w, sp, -1, 0.0, profile)
    upper0 = subsuper_on_grid(w, sp, 1, 0.0, profile)
    if np.any(start < lower0 - tolerance) or np.any(start > upper0 + tolerance):
        raise SqueezeError("initial data is not squeezed between the sub- and super-solution")

    mask = g.interior_mask(fraction, w.xi)
    state = replace(make_initial(g, p, kind="custom", samples=start, check_limits=False), t=0.0)
    stepper = ETDStepper(g, cfg.dt, cfg.order)
    worst_lower = float(np.min((start - lower0)[mask]))
    worst_upper = float(np.min((upper0 - start)[mask]))
    sampled = []
    for t in sorted(float(t) for t in times):
        state = advance(state, p, cfg, t, stepper)
        u = state.u
        worst_lower = min(worst_lower, float(np.min((u - subsuper_on_grid(w, sp, -1, state.t, profile))[mask])))
        worst_upper = min(worst_upper, float(np.min((subsuper_on_grid(w, sp, 1, state.t, profile) - u)[mask])))
        sampled.append(state.t)
    return SandwichReport(tolerance=tolerance, worst_lower=worst_lower, worst_upper=worst_upper, times=sampled)
