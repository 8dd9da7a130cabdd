from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.optimize import brentq

from weertman.errors import PotentialError

ScalarMap = Callable[[Any], Any]

DEFAULT_DELTA0 = 0.1
MARGIN_SAMPLES = 10_000
PROBE_COUNT = 101
FD_STEP = 1e-5
FD_RTOL = 1e-6
WELL_ATOL = 1e-10

# camel-hump: quartic minus a Gaussian dip multiplied by (1 - u^2)^2 so the
# wells at -1, 1 and their curvature are untouched while u = 0 becomes a minor well.
CAMEL_HUMP_DEPTH = 0.15
CAMEL_HUMP_WIDTH = 0.2


@dataclass(frozen=True)
class BistablePotential:
    eta_l: float
    eta_r: float
    F: ScalarMap
    F1: ScalarMap
    F2: ScalarMap
    F3: ScalarMap
    delta0: float = DEFAULT_DELTA0
    family: str = "custom"
    params: dict[str, float] = field(default_factory=dict)

    @property
    def jump(self) -> float:
        return self.eta_r - self.eta_l

    @property
    def energy_gap(self) -> float:
        """F(eta_r) - F(eta_l); its sign is the sign of the wave velocity."""
        return float(self.F(self.eta_r) - self.F(self.eta_l))

    @property
    def is_balanced(self) -> bool:
        return abs(self.energy_gap) <= 1e-14

    def attained_range(self) -> tuple[float, float]:
        return self.eta_l - self.delta0, self.eta_r + self.delta0

    def reference_width(self) -> float:
        """Arctan width matching the predicted 1/x tails on both sides."""
        return 0.5 * float(self.F2(self.eta_l) + self.F2(self.eta_r))

    def describe(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "eta_l": self.eta_l,
            "eta_r": self.eta_r,
            "delta0": self.delta0,
            **{f"param_{key}": value for key, value in sorted(self.params.items())},
        }


@dataclass(frozen=True)
class WellCurvature:
    beta: float


def make_sinusoidal(A: float, delta0: float = DEFAULT_DELTA0) -> BistablePotential:
    """Peierls-Nabarro potential (A / 4 pi^2)(1 - cos 2 pi u) with wells at 0 and 1."""
    if not A > 0:
        raise PotentialError(f"A must be positive, got {A}")
    two_pi = 2.0 * math.pi
    return BistablePotential(
        eta_l=0.0,
        eta_r=1.0,
        F=lambda u: A / two_pi**2 * (1.0 - np.cos(two_pi * u)),
        F1=lambda u: A / two_pi * np.sin(two_pi * u),
        F2=lambda u: A * np.cos(two_pi * u),
        F3=lambda u: -A * two_pi * np.sin(two_pi * u),
        delta0=delta0,
        family="sinusoidal",
        params={"A": float(A)},
    )


def make_tilted_sinusoidal(A: float, drive: float, delta0: float = DEFAULT_DELTA0) -> BistablePotential:
    if drive == 0:
        return make_sinusoidal(A, delta0)
    base = make_sinusoidal(A, delta0)
    two_pi = 2.0 * math.pi

    def F1(u: Any) -> Any:
        return base.F1(u) - drive

    eta_l = _find_well(F1, base.F2, -0.25, 0.25)
    eta_r = _find_well(F1, base.F2, 0.75, 1.25)
    return BistablePotential(
        eta_l=eta_l,
        eta_r=eta_r,
        F=lambda u: A / two_pi**2 * (1.0 - np.cos(two_pi * u)) - drive * u,
        F1=F1,
        F2=base.F2,
        F3=base.F3,
        delta0=delta0,
        family="tilted-sinusoidal",
        params={"A": float(A), "drive": float(drive)},
    )


def _find_well(F1: ScalarMap, F2: ScalarMap, lo: float, hi: float) -> float:
    f_lo, f_hi = float(F1(lo)), float(F1(hi))
    if not (f_lo < 0.0 < f_hi):
        raise PotentialError("drive too large: F' has no stable root near the unperturbed well")
    root = brentq(F1, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if not float(F2(root)) > 0.0:
        raise PotentialError("drive too large: perturbed well has non-positive curvature")
    return float(root)


def make_quartic(delta0: float = DEFAULT_DELTA0) -> BistablePotential:
    """(1 - u^2)^2 / 4 with wells at -1 and 1."""
    return BistablePotential(
        eta_l=-1.0,
        eta_r=1.0,
        F=lambda u: 0.25 * (1.0 - u**2) ** 2,
        F1=lambda u: u**3 - u,
        F2=lambda u: 3.0 * u**2 - 1.0,
        F3=lambda u: 6.0 * u,
        delta0=delta0,
        family="quartic",
        params={},
    )


def make_camel_hump(
    depth: float = CAMEL_HUMP_DEPTH,
    width: float = CAMEL_HUMP_WIDTH,
    delta0: float = DEFAULT_DELTA0,
) -> BistablePotential:
    if depth < 0 or width <= 0:
        raise PotentialError(f"camel-hump needs depth >= 0 and width > 0, got {depth}, {width}")
    s2 = width**2

    def q(u: Any, order: int) -> Any:
        return (
            (1.0 - u**2) ** 2,
            -4.0 * u * (1.0 - u**2),
            12.0 * u**2 - 4.0,
            24.0 * u,
        )[order]

    def g(u: Any, order: int) -> Any:
        base = np.exp(-(u**2) / (2.0 * s2))
        return base * (
            1.0,
            -u / s2,
            u**2 / s2**2 - 1.0 / s2,
            -(u**3) / s2**3 + 3.0 * u / s2**2,
        )[order]

    def derivative(order: int) -> ScalarMap:
        binomial = ((1,), (1, 1), (1, 2, 1), (1, 3, 3, 1))[order]

        def fn(u: Any) -> Any:
            bump = sum(c * g(u, j) * q(u, order - j) for j, c in enumerate(binomial))
            return 0.25 * q(u, order) - depth * bump

        return fn

    return BistablePotential(
        eta_l=-1.0,
        eta_r=1.0,
        F=derivative(0),
        F1=derivative(1),
        F2=derivative(2),
        F3=derivative(3),
        delta0=delta0,
        family="camel-hump",
        params={"depth": float(depth), "width": float(width)},
    )


def make_potential(family: str, delta0: float = DEFAULT_DELTA0, **params: float) -> BistablePotential:
    if family == "sinusoidal":
        return make_sinusoidal(params.get("A", 1.0), delta0)
    if family == "tilted-sinusoidal":
        return make_tilted_sinusoidal(params.get("A", 1.0), params.get("drive", 0.0), delta0)
    if family == "quartic":
        return make_quartic(delta0)
    if family == "camel-hump":
        return make_camel_hump(
            params.get("depth", CAMEL_HUMP_DEPTH),
            params.get("width", CAMEL_HUMP_WIDTH),
            delta0,
        )
    raise PotentialError(f"unknown potential family: {family}")


def well_margins(p: BistablePotential, delta0: float | None = None) -> list[np.ndarray]:
    margin = p.delta0 if delta0 is None else delta0
    return [
        np.linspace(well - margin, well + margin, MARGIN_SAMPLES)
        for well in (p.eta_l, p.eta_r)
    ]


def well_curvature(p: BistablePotential, delta0: float | None = None) -> float:
    """inf of F'' over the two delta0-neighbourhoods of the wells."""
    return float(min(np.min(p.F2(samples)) for samples in well_margins(p, delta0)))


def sup_curvature(p: BistablePotential, samples: int = MARGIN_SAMPLES) -> float:
    """sup |F''| over [eta_l - delta0, eta_r + delta0]."""
    lo, hi = p.attained_range()
    return float(np.max(np.abs(p.F2(np.linspace(lo, hi, samples)))))


def validate(p: BistablePotential, delta0: float | None = None) -> WellCurvature:
    margin = p.delta0 if delta0 is None else delta0
    if not margin > 0:
        raise PotentialError(f"well margin delta0 must be positive, got {margin}")
    if not p.eta_l < p.eta_r:
        raise PotentialError(f"bistable hypothesis: need eta_l < eta_r, got {p.eta_l}, {p.eta_r}")

    for name, well in (("eta_l", p.eta_l), ("eta_r", p.eta_r)):
        slope = float(p.F1(well))
        if abs(slope) > WELL_ATOL:
            raise PotentialError(f"bistable hypothesis: F'({name}) = {slope:.3e} is not zero")

    beta = well_curvature(p, margin)
    if not beta > 0:
        raise PotentialError(
            f"well margin hypothesis: F'' is not positive on the delta0={margin} "
            f"neighbourhoods of the wells (inf F'' = {beta:.6f})"
        )

    probes = np.linspace(p.eta_l - margin, p.eta_r + margin, PROBE_COUNT)
    for lower, upper, label in ((p.F, p.F1, "F'"), (p.F1, p.F2, "F''"), (p.F2, p.F3, "F'''")):
        numeric = (lower(probes + FD_STEP) - lower(probes - FD_STEP)) / (2.0 * FD_STEP)
        exact = upper(probes)
        scale = max(float(np.max(np.abs(exact))), 1.0)
        error = float(np.max(np.abs(numeric - exact))) / scale
        if error > FD_RTOL:
            raise PotentialError(
                f"derivative consistency: {label} disagrees with the central difference "
                f"(relative error {error:.3e})"
            )
    return WellCurvature(beta=beta)


def check_strict_barrier(p: BistablePotential, samples: int = 4001) -> bool:
    """Dense check of the stronger existence condition on (eta_l, eta_r)."""
    u = np.linspace(p.eta_l, p.eta_r, samples)[1:-1]
    F_values = p.F(u)
    above_left = bool(np.all(F_values > p.F(p.eta_l)))
    climbing_or_above_right = bool(np.all((p.F1(u) > 0) | (F_values > p.F(p.eta_r))))
    return above_left and climbing_or_above_right
