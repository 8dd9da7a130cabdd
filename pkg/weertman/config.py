from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, get_args, get_origin, get_type_hints

from weertman.errors import ConfigError, WeertmanError

# =============================================
# Grid / potential defaults
# =============================================

DEFAULT_POTENTIAL = "sinusoidal"
DEFAULT_A = 1.0
DEFAULT_L = 200.0
DEFAULT_N = 8192
DEFAULT_DELTA0 = 0.1

# =============================================
# Time stepping
# =============================================

DEFAULT_DT = 0.01
DEFAULT_T_END = 100.0
DEFAULT_ORDER = 2
DEFAULT_RECORD_EVERY = 0.5

# =============================================
# Analysis / squeeze
# =============================================

DEFAULT_TAIL_WINDOW = (20.0, 80.0)
DEFAULT_RADII = (10.0, 20.0, 40.0, 60.0, 80.0, 100.0)
DEFAULT_DELTA1 = 0.05
DEFAULT_SQUEEZE_DELTA = 0.02

# output directory (runs.db lives here too unless --db-path is given)
OUTPUT_DIR = "output"

POTENTIAL_FAMILIES = ("sinusoidal", "tilted-sinusoidal", "quartic", "camel-hump")
STAGES = ("evolve", "analyze", "squeeze")
OPERATOR_PROFILES = ("poisson", "reference")


@dataclass
class RunConfig:
    potential: str = DEFAULT_POTENTIAL
    A: float = DEFAULT_A
    drive: float = 0.0
    depth: float = 0.15
    width: float = 0.2
    delta0: float = DEFAULT_DELTA0

    L: float = DEFAULT_L
    N: int = DEFAULT_N

    dt: float = DEFAULT_DT
    t_end: float = DEFAULT_T_END
    order: int = DEFAULT_ORDER
    recenter_every: float = 0.0
    record_every: float = DEFAULT_RECORD_EVERY
    range_check: bool = False
    progress: bool = False

    initial: str = "step"
    initial_width: float = 1.0
    initial_amplitude: float = 0.05
    initial_center: float = 0.0

    residual_fraction: float = 0.5
    tail_window: tuple[float, ...] = DEFAULT_TAIL_WINDOW
    radii: tuple[float, ...] = DEFAULT_RADII
    rate_window: tuple[float, ...] = (1e-6, 1e-2)

    operator_profile: str = "reference"
    operator_probes: int = 41
    operator_threshold: float = 0.0
    R_int: float = 1e4
    quad_points: int = 32

    delta1: float = DEFAULT_DELTA1
    squeeze_delta: float = DEFAULT_SQUEEZE_DELTA
    squeeze_l: float = 0.0
    cap_sigma: bool = False
    squeeze_times: int = 25
    squeeze_points: int = 64
    squeeze_t_max: float = 10.0
    squeeze_span: float = 40.0
    squeeze_tolerance: float = 5e-3

    stages: tuple[str, ...] = STAGES
    require_rate_fit: bool = False
    max_residual: float = 0.0
    max_abs_velocity: float = 0.0

    comparison_pairs: int = 10
    range_cases: int = 20
    range_t_end: float = 50.0

    seed: int = 0
    out_dir: str = OUTPUT_DIR

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.potential not in POTENTIAL_FAMILIES:
            raise ConfigError("potential", f"unknown family {self.potential!r}, expected one of {POTENTIAL_FAMILIES}")
        _require(self.L > 0, "L", "L must be positive")
        _require(self.N >= 8 and self.N % 2 == 0, "N", f"N must be even and at least 8, got {self.N}")
        _require(self.dt > 0, "dt", "dt must be positive")
        _require(self.t_end > 0, "t_end", "t_end must be positive")
        _require(self.order in (1, 2), "order", f"order must be 1 or 2, got {self.order}")
        _require(self.record_every > 0, "record_every", "record_every must be positive")
        _require(self.recenter_every >= 0, "recenter_every", "recenter_every must be nonnegative")
        _require(self.delta0 > 0, "delta0", "delta0 must be positive")
        _require(0 < self.delta1 < self.delta0, "delta1", f"delta1 must lie in (0, delta0={self.delta0})")
        _require(
            0 < self.squeeze_delta < self.delta1,
            "squeeze_delta",
            f"squeeze_delta must lie in (0, delta1={self.delta1})",
        )
        _require(
            len(self.tail_window) == 2 and 10 <= self.tail_window[0] < self.tail_window[1],
            "tail_window",
            "tail_window must be two values with 10 <= lo < hi",
        )
        _require(
            len(self.rate_window) == 2 and 0 < self.rate_window[0] < self.rate_window[1],
            "rate_window",
            "rate_window must be two values with 0 < lo < hi",
        )
        _require(
            len(self.radii) >= 2 and all(b > a for a, b in zip(self.radii, self.radii[1:])),
            "radii",
            "radii must hold at least two strictly increasing values",
        )
        _require(
            self.radii[-1] <= self.L / 2.0 + 1e-12,
            "radii",
            f"radii must not exceed L/2 = {self.L / 2.0}",
        )
        _require(0 < self.residual_fraction <= 1, "residual_fraction", "residual_fraction must lie in (0, 1]")
        _require(
            self.operator_profile in OPERATOR_PROFILES,
            "operator_profile",
            f"operator_profile must be one of {OPERATOR_PROFILES}",
        )
        _require(self.operator_probes >= 1, "operator_probes", "operator_probes must be positive")
        _require(self.operator_threshold >= 0, "operator_threshold", "operator_threshold must be nonnegative")
        _require(self.squeeze_times >= 1 and self.squeeze_points >= 1, "squeeze_times", "sample counts must be positive")
        _require(self.squeeze_tolerance >= 0, "squeeze_tolerance", "squeeze_tolerance must be nonnegative")
        unknown = [stage for stage in self.stages if stage not in STAGES]
        _require(not unknown, "stages", f"unknown stages {unknown}, expected a subset of {STAGES}")
        _require(self.seed >= 0, "seed", "seed must be nonnegative")

    @property
    def potential_params(self) -> dict[str, float]:
        if self.potential in ("sinusoidal", "tilted-sinusoidal"):
            params = {"A": self.A}
            if self.potential == "tilted-sinusoidal":
                params["drive"] = self.drive
            return params
        if self.potential == "camel-hump":
            return {"depth": self.depth, "width": self.width}
        return {}

    def operator_limit(self) -> float:
        """Acceptance threshold for the operator check: max(1e-6, 5 / L) unless configured."""
        return self.operator_threshold or max(1e-6, 5.0 / self.L)

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        for key, value in payload.items():
            if isinstance(value, tuple):
                payload[key] = list(value)
        return payload


def _require(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(key, message)


def _field_types() -> dict[str, Any]:
    hints = get_type_hints(RunConfig)
    return {item.name: hints[item.name] for item in fields(RunConfig)}


def _coerce(key: str, raw: Any, annotation: Any) -> Any:
    if get_origin(annotation) is tuple:
        (item_type, _) = get_args(annotation)
        if isinstance(raw, str):
            raw = [token.strip() for token in raw.split(",") if token.strip()]
        if not isinstance(raw, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {type(raw).__name__}")
        return tuple(_coerce(key, item, item_type) for item in raw)
    if annotation is bool:
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, str) and raw.strip().lower() in ("1", "true", "yes", "on", "0", "false", "no", "off"):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        raise ConfigError(key, f"expected a boolean, got {raw!r}")
    if annotation is int:
        if isinstance(raw, bool):
            raise ConfigError(key, f"expected an integer, got {raw!r}")
        if isinstance(raw, float) and raw.is_integer():
            return int(raw)
        if isinstance(raw, int):
            return raw
        if isinstance(raw, str):
            try:
                return int(raw)
            except ValueError:
                pass
        raise ConfigError(key, f"expected an integer, got {raw!r}")
    if annotation is float:
        if isinstance(raw, bool):
            raise ConfigError(key, f"expected a number, got {raw!r}")
        if isinstance(raw, (int, float)):
            return float(raw)
        if isinstance(raw, str):
            try:
                return float(raw)
            except ValueError:
                pass
        raise ConfigError(key, f"expected a number, got {raw!r}")
    if annotation is str:
        if not isinstance(raw, str):
            raise ConfigError(key, f"expected a string, got {raw!r}")
        return raw
    raise ConfigError(key, f"unsupported field type {annotation!r}")


def parse_overrides(pairs: list[str] | None) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(pair, "override must look like key=value")
        overrides[key.strip()] = value.strip()
    return overrides


def parse_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """Load a JSON config file, apply overrides and validate everything.

    File values are taken as JSON types; override values may also be strings
    (``--set N=1024``) and are coerced to the field type. Unknown keys and type
    mismatches raise ``ConfigError`` naming the key.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError("config", f"file not found: {config_path}")
        try:
            loaded = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config", "top level must be a JSON object")
        raw.update(loaded)
    raw.update(overrides or {})

    types = _field_types()
    unknown = sorted(set(raw) - set(types))
    if unknown:
        raise ConfigError(unknown[0], "unknown config key")

    values = {key: _coerce(key, value, types[key]) for key, value in raw.items()}
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except WeertmanError as exc:
        raise ConfigError("config", str(exc)) from exc


def module_parameters() -> dict[str, Any]:
    """Module-level constants that shape a run; echoed to the manifest next to the config."""
    from weertman import evolution, halflap, potential, semigroup, squeeze, wave_analysis

    return {
        "potential.MARGIN_SAMPLES": potential.MARGIN_SAMPLES,
        "potential.FD_STEP": potential.FD_STEP,
        "potential.FD_RTOL": potential.FD_RTOL,
        "potential.WELL_ATOL": potential.WELL_ATOL,
        "halflap.NEAR_ZERO": halflap.NEAR_ZERO,
        "halflap.PANEL_RATIO": halflap.PANEL_RATIO,
        "semigroup.KERNEL_DERIVATIVE_CONSTANT": semigroup.KERNEL_DERIVATIVE_CONSTANT,
        "semigroup.SERIES_CUTOFF": semigroup.SERIES_CUTOFF,
        "evolution.LIMIT_FRACTION": evolution.LIMIT_FRACTION,
        "evolution.RANGE_TOL": evolution.RANGE_TOL,
        "evolution.MONOTONE_TOL": evolution.MONOTONE_TOL,
        "evolution.DT_GUARD": evolution.DT_GUARD,
        "evolution.REFERENCE_ORACLE_TOL": evolution.REFERENCE_ORACLE_TOL,
        "wave_analysis.MIN_TRACKING_SAMPLES": wave_analysis.MIN_TRACKING_SAMPLES,
        "wave_analysis.TAIL_FLOOR": wave_analysis.TAIL_FLOOR,
        "wave_analysis.RATE_ADMISSIBLE": list(wave_analysis.RATE_ADMISSIBLE),
        "wave_analysis.RATE_MIN_SAMPLES": wave_analysis.RATE_MIN_SAMPLES,
        "wave_analysis.RATE_MIN_WINDOW": wave_analysis.RATE_MIN_WINDOW,
        "squeeze.COMPARISON_TOL": squeeze.COMPARISON_TOL,
        "squeeze.RESIDUAL_FACTOR": squeeze.RESIDUAL_FACTOR,
        "squeeze.OUTER_FRACTION": squeeze.OUTER_FRACTION,
    }


def build_manifest(cfg: RunConfig, command: str, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    return {
        "command": command,
        "config": cfg.to_dict(),
        "modules": module_parameters(),
        **(extra or {}),
    }
