import json
import math

import numpy as np
import pandas as pd
import pytest

from weertman.evolution import EvolveConfig, evolve, make_initial
from weertman.output import (
    EVOLVE_JSON,
    PROFILES_CSV,
    TIMESERIES_CSV,
    load_run,
    read_json,
    save_run,
    write_csv,
    write_json,
)


@pytest.fixture(scope="module")
def short_run(sinusoidal, small_grid):
    return evolve(make_initial(small_grid, sinusoidal, kind="smoothed-step"), sinusoidal, EvolveConfig(dt=0.05, t_end=1.0))


def test_json_is_sorted_and_nulls_non_finite(tmp_path):
    path = write_json({"b": float("nan"), "a": np.float64(1.5), "c": [np.int64(2), float("inf")]}, tmp_path / "r.json")
    text = path.read_text(encoding="utf-8")
    assert json.loads(text) == {"a": 1.5, "b": None, "c": [2, None]}
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("}\n")
    assert not list(tmp_path.glob(".r.json.*"))


def test_csv_keeps_full_precision(tmp_path):
    frame = pd.DataFrame({"x": [0.1, 1.0 / 3.0], "u": [math.pi, -2.5e-17]})
    path = write_csv(frame, tmp_path / "nested" / "f.csv")
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[0] == "x,u"
    assert lines[1] == "1.0000000000000001e-01,3.1415926535897931e+00"
    reread = pd.read_csv(path)
    assert reread["x"].tolist() == frame["x"].tolist()
    assert reread["u"].tolist() == frame["u"].tolist()


def test_save_and_load_run(tmp_path, short_run):
    report, final = short_run
    save_run(tmp_path, final, report, {"note": "short"})
    for name in (PROFILES_CSV, TIMESERIES_CSV, EVOLVE_JSON):
        assert (tmp_path / name).exists()
    assert read_json(tmp_path / EVOLVE_JSON)["note"] == "short"

    state, loaded = load_run(tmp_path)
    assert state.grid == final.grid
    assert state.t == final.t
    assert state.ref == final.ref
    np.testing.assert_array_equal(state.v, final.v)
    assert loaded.times == report.times
    assert loaded.fronts == report.fronts
    assert loaded.snapshots == []


def test_profiles_columns(tmp_path, short_run):
    _, final = short_run
    save_run(tmp_path, final, short_run[0])
    profiles = pd.read_csv(tmp_path / PROFILES_CSV)
    assert list(profiles.columns) == ["x", "u", "v", "psi"]
    np.testing.assert_allclose(profiles["u"], profiles["v"] + profiles["psi"], atol=1e-15)
