from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from weertman.errors import (
    BlowUpError,
    EvolutionError,
    FrontEscapeError,
    InitialDataError,
    RangeViolationError,
)
from weertman.grid import Grid
from weertman.halflap import apply_spectral, oracle_pv, spectral_derivative
from weertman.potential import BistablePotential, sup_curvature
from weertman.semigroup import ETDStepper

LogCallback = Callable[[str], None]

INITIAL_KINDS = ("step", "smoothed-step", "perturbed-wave", "custom")
LIMIT_FRACTION = 0.05
RANGE_TOL = 1e-8
MONOTONE_TOL = 1e-8
DT_GUARD = 0.2
REFERENCE_PROBES = (-2.0, -0.5, 0.0, 0.5, 2.0)
REFERENCE_ORACLE_TOL = 1e-6


@dataclass(frozen=True)
class ReferenceProfile:
    """psi(x) = eta_l + (eta_r - eta_l)(1/2 + arctan(a (x - X0)) / pi).

    psi carries the boundary limits so that v = u - psi decays at both ends.
    With eta_l == eta_r it is a flat level.
    """

    eta_l: float
    eta_r: float
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise EvolutionError(f"reference width must be positive, got {self.width}")

    @property
    def jump(self) -> float:
        return self.eta_r - self.eta_l

    @property
    def is_flat(self) -> bool:
        return self.jump == 0

    def values(self, x: np.ndarray) -> np.ndarray:
        s = self.width * (np.asarray(x, dtype=float) - self.center)
        return self.eta_l + self.jump * (0.5 + np.arctan(s) / math.pi)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        s = self.width * (np.asarray(x, dtype=float) - self.center)
        return self.jump * self.width / (math.pi * (1.0 + s**2))

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        s = self.width * (np.asarray(x, dtype=float) - self.center)
        return -2.0 * self.jump * self.width**2 * s / (math.pi * (1.0 + s**2) ** 2)

    def halflap(self, x: np.ndarray) -> np.ndarray:
        """|d/dx| psi in closed form (Hilbert transform of the Poisson kernel psi')."""
        s = self.width * (np.asarray(x, dtype=float) - self.center)
        return self.jump * self.width * s / (math.pi * (1.0 + s**2))

    def recentered(self, center: float) -> ReferenceProfile:
        return replace(self, center=center)

    def check_against_oracle(self) -> float:
        """Largest deviation between the closed form and the singular-integral oracle."""
        if self.is_flat:
            return 0.0
        worst = 0.0
        for offset in REFERENCE_PROBES:
            x = self.center + offset / self.width
            oracle = oracle_pv(self.values, x, limits=(self.eta_l, self.eta_r))
            worst = max(worst, abs(oracle - float(self.halflap(np.asarray([x]))[0])))
        if worst > REFERENCE_ORACLE_TOL * max(1.0, abs(self.jump)):
            raise EvolutionError(f"reference |d/dx| closed form off by {worst:.3e}")
        return worst


@dataclass(frozen=True)
class WaveState:
    t: float
    grid: Grid
    ref: ReferenceProfile
    v: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return self.ref.values(self.grid.points)

    @property
    def u(self) -> np.ndarray:
        return self.psi + self.v

    def tail_constant(self) -> float:
        """B such that |v| at both ends of the domain equals at most B / L."""
        return float(self.grid.half_length * max(abs(self.v[0]), abs(self.v[-1])))


@dataclass
class EvolveConfig:
    dt: float = 0.01
    t_end: float = 100.0
    order: int = 2
    recenter_every: float = 0.0
    record_every: float = 0.5
    range_check: bool = False
    keep_snapshots: bool = True
    progress: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise EvolutionError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise EvolutionError(f"t_end must be positive, got {self.t_end}")
        if self.order not in (1, 2):
            raise EvolutionError(f"order must be 1 or 2, got {self.order}")
        if self.recenter_every < 0:
            raise EvolutionError(f"recenter_every must be nonnegative, got {self.recenter_every}")
        if not self.record_every > 0:
            raise EvolutionError(f"record_every must be positive, got {self.record_every}")

    def check_guard(self, p: BistablePotential) -> None:
        curvature = sup_curvature(p)
        if curvature > 0 and self.dt > DT_GUARD / curvature:
            raise EvolutionError(
                f"dt={self.dt} exceeds the stability guard {DT_GUARD}/sup|F''| = {DT_GUARD / curvature:.4g}"
            )


@dataclass
class RunReport:
    grid: Grid
    times: list[float] = field(default_factory=list)
    fronts: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    umin: list[float] = field(default_factory=list)
    umax: list[float] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    distances: list[float] = field(default_factory=list)
    recenter_times: list[float] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    tail_constant: float = float("nan")
    initial_in_range: bool = True

    def record(self, t: float, front: float, residual: float, u: np.ndarray, keep: bool) -> None:
        self.times.append(t)
        self.fronts.append(front)
        self.residuals.append(residual)
        self.umin.append(float(np.min(u)))
        self.umax.append(float(np.max(u)))
        if keep:
            self.snapshots.append(u.copy())

    def timeseries_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "t": self.times,
                "X": self.fronts,
                "residual": self.residuals,
                "umin": self.umin,
                "umax": self.umax,
            }
        )
        if len(self.distances) == len(self.times):
            frame["distance"] = self.distances
        return frame

    @classmethod
    def from_frame(cls, grid: Grid, frame: pd.DataFrame) -> RunReport:
        report = cls(grid=grid)
        report.times = frame["t"].astype(float).tolist()
        report.fronts = frame["X"].astype(float).tolist()
        report.residuals = frame["residual"].astype(float).tolist()
        report.umin = frame["umin"].astype(float).tolist()
        report.umax = frame["umax"].astype(float).tolist()
        if "distance" in frame:
            report.distances = frame["distance"].astype(float).tolist()
        return report


class ResidualReport(NamedTuple):
    value: float
    monotone: bool


def front_crossings(g: Grid, u: np.ndarray, level: float) -> list[float]:
    """All crossings of ``level`` by the piecewise-linear interpolant, left to right."""
    above = np.asarray(u) - level
    candidates = np.flatnonzero((above[:-1] * above[1:] <= 0) & (above[:-1] != above[1:]))
    crossings = []
    for index in candidates:
        lo, hi = above[index], above[index + 1]
        crossings.append(float(g.points[index] + g.spacing * (-lo) / (hi - lo)))
    return crossings


def front_position(g: Grid, u: np.ndarray, level: float) -> float:
    crossings = front_crossings(g, u, level)
    return crossings[0] if crossings else float("nan")


def make_reference(
    g: Grid,
    p: BistablePotential,
    u0: np.ndarray,
    verify: bool = True,
) -> ReferenceProfile:
    if abs(float(u0[0]) - float(u0[-1])) <= 1e-12:
        return ReferenceProfile(eta_l=float(u0[0]), eta_r=float(u0[0]))
    level = 0.5 * (p.eta_l + p.eta_r)
    center = front_position(g, u0, level)
    ref = ReferenceProfile(
        eta_l=p.eta_l,
        eta_r=p.eta_r,
        center=0.0 if math.isnan(center) else center,
        width=p.reference_width(),
    )
    if verify:
        ref.check_against_oracle()
    return ref


def check_initial_data(g: Grid, p: BistablePotential, u0: np.ndarray, check_limits: bool = True) -> None:
    lo, hi = p.attained_range()
    if np.any(u0 < lo - 1e-12) or np.any(u0 > hi + 1e-12):
        raise InitialDataError(
            f"initial range violation: u0 must take values in [{lo:.6g}, {hi:.6g}], "
            f"got [{float(np.min(u0)):.6g}, {float(np.max(u0)):.6g}]"
        )
    if not check_limits:
        return
    edge = max(1, int(math.ceil(LIMIT_FRACTION * g.n_points)))
    if np.any(np.abs(u0[:edge] - p.eta_l) >= p.delta0):
        raise InitialDataError("initial limit violation: u0 must stay within delta0 of eta_l on the left")
    if np.any(np.abs(u0[-edge:] - p.eta_r) >= p.delta0):
        raise InitialDataError("initial limit violation: u0 must stay within delta0 of eta_r on the right")


def make_initial(
    g: Grid,
    p: BistablePotential,
    kind: str = "step",
    samples: np.ndarray | None = None,
    width: float = 1.0,
    amplitude: float = 0.05,
    center: float = 0.0,
    check_limits: bool = True,
    verify_reference: bool = True,
) -> WaveState:
    x = np.asarray(g.points)
    if kind == "step":
        u0 = np.where(x < center, p.eta_l, p.eta_r).astype(float)
    elif kind == "smoothed-step":
        if not width > 0:
            raise InitialDataError(f"smoothed-step width must be positive, got {width}")
        u0 = ReferenceProfile(p.eta_l, p.eta_r, center, 1.0 / width).values(x)
    elif kind == "perturbed-wave":
        base = ReferenceProfile(p.eta_l, p.eta_r, center, p.reference_width()).values(x)
        bump = amplitude * np.exp(-0.5 * ((x - center - 2.0 * width) / width) ** 2)
        lo, hi = p.attained_range()
        u0 = np.clip(base + bump, lo, hi)
    elif kind == "custom":
        if samples is None:
            raise InitialDataError("custom initial data needs samples")
        u0 = np.asarray(g.check_length(samples, "samples"), dtype=float).copy()
    else:
        raise InitialDataError(f"unknown initial kind {kind!r}, expected one of {INITIAL_KINDS}")

    check_initial_data(g, p, u0, check_limits=check_limits)
    ref = make_reference(g, p, u0, verify=verify_reference)
    return WaveState(t=0.0, grid=g, ref=ref, v=u0 - ref.values(x))


def make_rhs(g: Grid, p: BistablePotential, ref: ReferenceProfile) -> Callable[[np.ndarray], np.ndarray]:
    """Nonlinear part of d_t v = -|d_x| v - F'(psi + v) - |d_x| psi."""
    psi = ref.values(g.points)
    forcing = ref.halflap(g.points)

    def rhs(v: np.ndarray) -> np.ndarray:
        return -np.asarray(p.F1(psi + v), dtype=float) - forcing

    return rhs


def step(s: WaveState, p: BistablePotential, cfg: EvolveConfig) -> WaveState:
    cfg.check_guard(p)
    stepper = ETDStepper(s.grid, cfg.dt, cfg.order)
    v = stepper.step(s.v, make_rhs(s.grid, p, s.ref), s.t)
    return replace(s, t=s.t + cfg.dt, v=v)


def time_derivative(s: WaveState, p: BistablePotential) -> np.ndarray:
    """d_t u = -|d_x| u - F'(u) at the current state."""
    g = s.grid
    return -apply_spectral(g, s.v) - s.ref.halflap(g.points) - np.asarray(p.F1(s.u), dtype=float)


def evolve(
    s0: WaveState,
    p: BistablePotential,
    cfg: EvolveConfig,
    logger: LogCallback | None = None,
) -> tuple[RunReport, WaveState]:
    g = s0.grid
    log = logger or (lambda message: None)
    cfg.check_guard(p)

    level = 0.5 * (p.eta_l + p.eta_r)
    lo, hi = p.attained_range()
    u0 = s0.u
    report = RunReport(grid=g)
    report.initial_in_range = bool(np.min(u0) >= lo - RANGE_TOL and np.max(u0) <= hi + RANGE_TOL)
    enforce_range = cfg.range_check and report.initial_in_range

    n_steps = max(1, int(round(cfg.t_end / cfg.dt)))
    record_stride = max(1, int(round(cfg.record_every / cfg.dt)))
    recenter_stride = int(round(cfg.recenter_every / cfg.dt)) if cfg.recenter_every > 0 else 0
    trusted = g.half_length - g.half_length / 10.0

    stepper = ETDStepper(g, cfg.dt, cfg.order)
    ref = s0.ref
    rhs = make_rhs(g, p, ref)
    v = np.asarray(s0.v, dtype=float).copy()
    t0 = s0.t
    crossings_logged = False

    front = _front(g, ref, v, level)
    initial_rate = float(np.max(np.abs(time_derivative(s0, p))))
    report.record(t0, front, initial_rate, u0, cfg.keep_snapshots)
    log(
        f"evolve start: N={g.n_points} L={g.half_length} dt={cfg.dt} t_end={cfg.t_end} "
        f"order={cfg.order} steps={n_steps}"
    )

    iterator = range(1, n_steps + 1)
    if cfg.progress:
        iterator = tqdm(iterator, desc="evolve", unit="step", mininterval=1.0)

    for index in iterator:
        t_prev = t0 + (index - 1) * cfg.dt
        t = t0 + index * cfg.dt
        try:
            v_next = stepper.step(v, rhs, t_prev)
        except BlowUpError as exc:
            log(f"blow-up after t={t_prev:.6g}")
            raise BlowUpError(f"{exc}; last finite time t={t_prev:.6g}", last_finite_time=t_prev) from exc
        increment = float(np.max(np.abs(v_next - v))) / cfg.dt
        v = v_next

        if enforce_range:
            u = ref.values(g.points) + v
            u_lo, u_hi = float(np.min(u)), float(np.max(u))
            if u_lo < lo - RANGE_TOL or u_hi > hi + RANGE_TOL:
                raise RangeViolationError(
                    f"range violation at t={t:.6g}: u in [{u_lo:.12g}, {u_hi:.12g}], "
                    f"allowed [{lo:.12g}, {hi:.12g}]"
                )

        if recenter_stride and index % recenter_stride == 0 and not ref.is_flat:
            front = _front(g, ref, v, level)
            if not math.isnan(front) and abs(front - ref.center) > g.half_length / 8.0:
                u = ref.values(g.points) + v
                ref = ref.recentered(front)
                v = u - ref.values(g.points)
                rhs = make_rhs(g, p, ref)
                report.recenter_times.append(t)
                log(f"recentered reference at t={t:.6g} to X0={front:.6g}")

        if index % record_stride == 0 or index == n_steps:
            u = ref.values(g.points) + v
            crossings = front_crossings(g, u, level)
            front = crossings[0] if crossings else float("nan")
            if len(crossings) > 1 and not crossings_logged:
                log(f"{len(crossings)} level crossings at t={t:.6g}; tracking the first")
                crossings_logged = True
            if not recenter_stride and not math.isnan(front) and abs(front) > trusted:
                log(f"front at X={front:.6g} left the trusted region at t={t:.6g}")
                raise FrontEscapeError(
                    f"front left trusted region: X={front:.6g} at t={t:.6g} (|X| must stay below {trusted:.6g})"
                )
            report.record(t, front, increment, u, cfg.keep_snapshots)

    final = WaveState(t=t0 + n_steps * cfg.dt, grid=g, ref=ref, v=v)
    report.tail_constant = final.tail_constant()
    log(
        f"evolve done: t={final.t:.6g} X={report.fronts[-1]:.6g} "
        f"residual={report.residuals[-1]:.3e} tail B={report.tail_constant:.4g}"
    )
    return report, final


def _front(g: Grid, ref: ReferenceProfile, v: np.ndarray, level: float) -> float:
    return front_position(g, ref.values(g.points) + v, level)


def translate_state(s: WaveState, shift_points: int) -> WaveState:
    """Shift by a whole number of grid points (periodic in v)."""
    g = s.grid
    ref = s.ref if s.ref.is_flat else s.ref.recentered(s.ref.center + shift_points * g.spacing)
    return replace(s, ref=ref, v=np.roll(s.v, shift_points))


def profile_derivative(g: Grid, ref: ReferenceProfile, v: np.ndarray) -> np.ndarray:
    return ref.derivative(g.points) + spectral_derivative(g, v)


def profile_halflap(g: Grid, ref: ReferenceProfile, v: np.ndarray) -> np.ndarray:
    return ref.halflap(g.points) + apply_spectral(g, v)


def is_monotone(eta: np.ndarray, tol: float = MONOTONE_TOL) -> bool:
    return bool(np.all(np.diff(eta) >= -tol))


def weertman_residual(
    g: Grid,
    p: BistablePotential,
    ref: ReferenceProfile,
    v: np.ndarray,
    c: float,
    fraction: float = 0.5,
    center: float = 0.0,
) -> ResidualReport:
    """sup over |x - center| <= fraction L of |-|d_x| eta + c eta' - F'(eta)| for eta = psi + v."""
    eta = ref.values(g.points) + v
    residual = (
        -profile_halflap(g, ref, v)
        + c * profile_derivative(g, ref, v)
        - np.asarray(p.F1(eta), dtype=float)
    )
    mask = g.interior_mask(fraction, center)
    return ResidualReport(value=float(np.max(np.abs(residual[mask]))), monotone=is_monotone(eta))


def advance(
    s: WaveState,
    p: BistablePotential,
    cfg: EvolveConfig,
    t_target: float,
    stepper: ETDStepper | None = None,
) -> WaveState:
    """March ``s`` to ``t_target`` (rounded to a whole number of steps) without recording."""
    n_steps = int(round((t_target - s.t) / cfg.dt))
    if n_steps < 0:
        raise EvolutionError(f"cannot advance backwards from t={s.t} to t={t_target}")
    stepper = stepper or ETDStepper(s.grid, cfg.dt, cfg.order)
    rhs = make_rhs(s.grid, p, s.ref)
    v = np.asarray(s.v, dtype=float)
    for index in range(n_steps):
        v = stepper.step(v, rhs, s.t + index * cfg.dt)
    return replace(s, t=s.t + n_steps * cfg.dt, v=v)
