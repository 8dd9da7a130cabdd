from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import pandas as pd

from weertman.config import RunConfig
from weertman.errors import AnalysisError, ConfigError, EvolutionError, GridError, PotentialError
from weertman.evolution import (
    EvolveConfig,
    ReferenceProfile,
    RunReport,
    WaveState,
    evolve,
    make_initial,
    weertman_residual,
)
from weertman.grid import Grid, make_grid
from weertman.halflap import operator_check_table
from weertman.potential import BistablePotential, check_strict_barrier, make_potential, validate
from weertman.squeeze import compute_squeeze_params, squeezed_data, verify_sandwich, verify_subsuper_residual
from weertman.wave_analysis import (
    RateFit,
    TravelingWave,
    analysis_summary,
    distance_series,
    fit_convergence_rate,
    fit_tail,
    measure_velocity_tracking,
    traveling_wave,
    velocity_identity_energy,
    velocity_identity_integral,
)

LogCallback = Callable[[str], None]


@dataclass
class Problem:
    potential: BistablePotential
    grid: Grid
    evolve: EvolveConfig
    beta: float


@dataclass
class StageResult:
    summary: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


@dataclass
class EvolveResult:
    state: WaveState
    report: RunReport
    wave: TravelingWave
    c_tracking: float


def _silent(message: str) -> None:
    return None


def build_problem(cfg: RunConfig, **evolve_overrides: Any) -> Problem:
    """Check every module precondition the config touches before any time stepping."""
    try:
        p = make_potential(cfg.potential, cfg.delta0, **cfg.potential_params)
        beta = validate(p).beta
    except PotentialError as exc:
        raise ConfigError("potential", str(exc)) from exc
    try:
        g = make_grid(cfg.L, cfg.N)
    except GridError as exc:
        raise ConfigError("N", str(exc)) from exc
    settings = {
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "order": cfg.order,
        "recenter_every": cfg.recenter_every,
        "record_every": cfg.record_every,
        "range_check": cfg.range_check,
        "progress": cfg.progress,
        **evolve_overrides,
    }
    try:
        ecfg = EvolveConfig(**settings)
        ecfg.check_guard(p)
    except EvolutionError as exc:
        raise ConfigError("dt", str(exc)) from exc
    return Problem(potential=p, grid=g, evolve=ecfg, beta=beta)


def describe_problem(problem: Problem) -> dict[str, Any]:
    g = problem.grid
    return {
        "potential": problem.potential.describe(),
        "grid": {"L": g.half_length, "N": g.n_points, "h": g.spacing, "k_max": g.k_max},
        "beta": problem.beta,
        "reference_width": problem.potential.reference_width(),
        "strict_barrier": check_strict_barrier(problem.potential),
    }


def tracking_or_nan(report: RunReport, notes: list[str]) -> float:
    try:
        return measure_velocity_tracking(report)
    except AnalysisError as exc:
        notes.append(f"tracking: {exc}")
        return float("nan")


def run_evolve(cfg: RunConfig, problem: Problem, logger: LogCallback | None = None) -> EvolveResult:
    log = logger or _silent
    p, g = problem.potential, problem.grid
    s0 = make_initial(
        g,
        p,
        kind=cfg.initial,
        width=cfg.initial_width,
        amplitude=cfg.initial_amplitude,
        center=cfg.initial_center,
    )
    report, final = evolve(s0, p, problem.evolve, logger=log)

    notes: list[str] = []
    c = tracking_or_nan(report, notes)
    wave = traveling_wave(final, 0.0 if math.isnan(c) else c)
    if report.snapshots:
        report.distances = distance_series(report, wave, cfg.residual_fraction)
        log(f"shift distance: d(0)={report.distances[0]:.3e} d(T)={report.distances[-1]:.3e}")
    for note in notes:
        log(note)
    return EvolveResult(state=final, report=report, wave=wave, c_tracking=c)


def evolve_summary(result: EvolveResult) -> dict[str, Any]:
    report = result.report
    return {
        "t_final": result.state.t,
        "X_final": report.fronts[-1],
        "rate_final": report.residuals[-1],
        "umin": float(np.min(report.umin)),
        "umax": float(np.max(report.umax)),
        "tail_constant": report.tail_constant,
        "recenter_count": len(report.recenter_times),
    }


def run_analyze(
    cfg: RunConfig,
    p: BistablePotential,
    state: WaveState,
    report: RunReport,
    logger: LogCallback | None = None,
) -> tuple[StageResult, TravelingWave]:
    log = logger or _silent
    result = StageResult()
    c_tracking = tracking_or_nan(report, result.notes)
    wave = traveling_wave(state, 0.0 if math.isnan(c_tracking) else c_tracking)
    c_idc1 = velocity_identity_energy(wave, p)
    c_idc2 = velocity_identity_integral(wave, p, cfg.radii)
    log(f"velocity: tracking={c_tracking:.6e} energy={c_idc1:.6e} integral={c_idc2:.6e}")

    for side in ("left", "right"):
        try:
            fit = fit_tail(wave, p, side, tuple(cfg.tail_window))
            log(f"tail {side}: prefactor={fit.prefactor:.6g} exponent={fit.exponent:.6g}")
        except AnalysisError as exc:
            result.notes.append(f"tail {side}: {exc}")

    rate: RateFit | None = None
    if report.distances:
        try:
            rate = fit_convergence_rate(report.times, report.distances, tuple(cfg.rate_window))
            log(f"rate: K={rate.K:.4g} kappa={rate.kappa:.6g} r2={rate.r_squared:.6f} decades={rate.decades:.2f}")
        except AnalysisError as exc:
            result.notes.append(f"rate: {exc}")
            if cfg.require_rate_fit:
                result.failures.append(f"rate fit required: {exc}")
    elif cfg.require_rate_fit:
        result.failures.append("rate fit required: no distance series recorded")

    residual = weertman_residual(
        state.grid, p, wave.ref, wave.v, wave.c, fraction=cfg.residual_fraction, center=wave.xi
    )
    result.summary = {
        **analysis_summary(c_tracking, c_idc1, c_idc2, wave, rate),
        "residual": residual.value,
        "monotone": residual.monotone,
        "rate_decades": rate.decades if rate else float("nan"),
        "energy_gap": p.energy_gap,
        "end_constant": wave.end_constant(),
    }

    if cfg.max_residual > 0 and not residual.value <= cfg.max_residual:
        result.failures.append(f"residual {residual.value:.3e} exceeds {cfg.max_residual:.3e}")
    if cfg.max_abs_velocity > 0:
        for name, value in (("c_tracking", c_tracking), ("c_idc1", c_idc1), ("c_idc2", c_idc2)):
            if not abs(value) <= cfg.max_abs_velocity:
                result.failures.append(f"|{name}| = {abs(value):.3e} exceeds {cfg.max_abs_velocity:.3e}")
    result.notes.extend(wave.notes)
    for note in result.notes:
        log(note)
    return result, wave


def squeeze_samples(cfg: RunConfig, wave: TravelingWave) -> tuple[np.ndarray, np.ndarray]:
    times = np.linspace(0.0, cfg.squeeze_t_max, cfg.squeeze_times)
    points = np.linspace(wave.xi - cfg.squeeze_span, wave.xi + cfg.squeeze_span, cfg.squeeze_points)
    return times, points


def run_squeeze(
    cfg: RunConfig,
    problem: Problem,
    wave: TravelingWave,
    logger: LogCallback | None = None,
) -> StageResult:
    log = logger or _silent
    p = problem.potential
    result = StageResult()
    sp = compute_squeeze_params(
        p,
        wave,
        cfg.delta1,
        delta=cfg.squeeze_delta,
        l=cfg.squeeze_l,
        cap_sigma=cfg.cap_sigma,
        logger=log,
    )
    times, points = squeeze_samples(cfg, wave)
    subsuper = verify_subsuper_residual(p, wave, sp, times, points, ceiling=cfg.squeeze_tolerance)
    log(
        f"sub/super residual: worst={subsuper.worst:.3e} tolerance={subsuper.tolerance:.3e} "
        f"violations={len(subsuper.violations)}"
    )
    sandwich = verify_sandwich(p, wave, sp, problem.evolve, times[1:], u0=squeezed_data(wave, sp))
    log(f"sandwich: lower margin={sandwich.worst_lower:.3e} upper margin={sandwich.worst_upper:.3e}")

    result.summary = {
        "squeeze_beta": sp.beta,
        "squeeze_sigma": sp.sigma,
        "squeeze_sigma_uncapped": sp.sigma_uncapped,
        "squeeze_delta": sp.delta,
        "squeeze_R0": sp.R0,
        **subsuper.as_dict(),
        **sandwich.as_dict(),
    }
    if not subsuper.passed:
        result.failures.append(f"sub/super residual below -{subsuper.tolerance:.3e} at {len(subsuper.violations)} samples")
    if not sandwich.passed:
        result.failures.append("evolved data left the sub/super sandwich")
    return result


def operator_profile(cfg: RunConfig, p: BistablePotential) -> tuple[Callable[[np.ndarray], np.ndarray], tuple[float, float]]:
    if cfg.operator_profile == "poisson":
        return (lambda x: 1.0 / (math.pi * (1.0 + np.square(x)))), (0.0, 0.0)
    ref = ReferenceProfile(p.eta_l, p.eta_r, 0.0, p.reference_width())
    return ref.values, (p.eta_l, p.eta_r)


def run_operator_check(cfg: RunConfig, problem: Problem, logger: LogCallback | None = None) -> tuple[pd.DataFrame, float]:
    log = logger or _silent
    u, limits = operator_profile(cfg, problem.potential)
    table = operator_check_table(
        problem.grid,
        u,
        n_probes=cfg.operator_probes,
        fraction=0.5,
        R_int=cfg.R_int,
        quad_points=cfg.quad_points,
        limits=limits,
    )
    worst = float(table["abs_err"].max())
    log(f"operator check ({cfg.operator_profile}): max abs_err={worst:.3e} threshold={cfg.operator_limit():.3e}")
    return table, worst
