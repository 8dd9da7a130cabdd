from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from weertman.evolution import ReferenceProfile, RunReport, WaveState
from weertman.grid import Grid, make_grid

FLOAT_FORMAT = "%.16e"

PROFILES_CSV = "profiles.csv"
TIMESERIES_CSV = "timeseries.csv"
REPORT_JSON = "report.json"
EVOLVE_JSON = "evolve.json"
MANIFEST_JSON = "manifest.json"
OPERATOR_CSV = "operator_check.csv"
SQUEEZE_JSON = "squeeze.json"
ACCEPTANCE_CSV = "acceptance.csv"


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    return path


def _plain(value: Any) -> Any:
    """numpy scalars to Python, non-finite floats to null."""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    return _atomic_write(Path(path), frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))


def write_json(payload: dict[str, Any], path: str | Path) -> Path:
    text = json.dumps(_plain(payload), ensure_ascii=False, indent=2, sort_keys=True)
    return _atomic_write(Path(path), text + "\n")


def read_json(path: str | Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def profiles_frame(state: WaveState) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "x": np.asarray(state.grid.points),
            "u": state.u,
            "v": state.v,
            "psi": state.psi,
        }
    )


def save_run(out_dir: str | Path, state: WaveState, report: RunReport, extra: dict[str, Any] | None = None) -> None:
    """profiles.csv, timeseries.csv and evolve.json (what ``analyze`` reads back)."""
    out = Path(out_dir)
    write_csv(profiles_frame(state), out / PROFILES_CSV)
    write_csv(report.timeseries_frame(), out / TIMESERIES_CSV)
    write_json(
        {
            "L": state.grid.half_length,
            "N": state.grid.n_points,
            "t": state.t,
            "ref_eta_l": state.ref.eta_l,
            "ref_eta_r": state.ref.eta_r,
            "ref_center": state.ref.center,
            "ref_width": state.ref.width,
            "tail_constant": report.tail_constant,
            "recenter_count": len(report.recenter_times),
            **(extra or {}),
        },
        out / EVOLVE_JSON,
    )


def load_run(out_dir: str | Path) -> tuple[WaveState, RunReport]:
    out = Path(out_dir)
    meta = read_json(out / EVOLVE_JSON)
    grid: Grid = make_grid(float(meta["L"]), int(meta["N"]))
    profiles = pd.read_csv(out / PROFILES_CSV)
    ref = ReferenceProfile(
        eta_l=float(meta["ref_eta_l"]),
        eta_r=float(meta["ref_eta_r"]),
        center=float(meta["ref_center"]),
        width=float(meta["ref_width"]),
    )
    state = WaveState(
        t=float(meta["t"]),
        grid=grid,
        ref=ref,
        v=grid.check_length(profiles["v"].to_numpy(dtype=float), "v"),
    )
    report = RunReport.from_frame(grid, pd.read_csv(out / TIMESERIES_CSV))
    if meta.get("tail_constant") is not None:
        report.tail_constant = float(meta["tail_constant"])
    return state, report
