import json

import pytest

from weertman.config import RunConfig, build_manifest, parse_config, parse_overrides
from weertman.errors import ConfigError


def test_defaults_validate():
    cfg = RunConfig()
    assert cfg.potential_params == {"A": 1.0}
    assert cfg.operator_limit() == pytest.approx(5.0 / 200.0)
    assert not cfg.cap_sigma
    assert RunConfig(N=1000).N == 1000


def test_potential_params_per_family():
    assert RunConfig(potential="tilted-sinusoidal", drive=0.01).potential_params == {"A": 1.0, "drive": 0.01}
    assert RunConfig(potential="camel-hump").potential_params == {"depth": 0.15, "width": 0.2}
    assert RunConfig(potential="quartic").potential_params == {}


@pytest.mark.parametrize(
    ("overrides", "key"),
    [
        ({"dt": "0"}, "dt"),
        ({"N": "1023"}, "N"),
        ({"order": "3"}, "order"),
        ({"delta1": "0.5"}, "delta1"),
        ({"L": "50"}, "radii"),
        ({"tail_window": "5,50"}, "tail_window"),
        ({"stages": "evolve,plot"}, "stages"),
        ({"potential": "cubic"}, "potential"),
        ({"no_such_key": "1"}, "no_such_key"),
        ({"N": "many"}, "N"),
        ({"range_check": "maybe"}, "range_check"),
    ],
)
def test_invalid_values_name_the_key(overrides, key):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(None, overrides)
    assert excinfo.value.key == key


def test_string_overrides_are_coerced():
    cfg = parse_config(None, parse_overrides(["N=1024", "L=50", "radii=5,10,20", "range_check=true", "stages=evolve"]))
    assert cfg.N == 1024 and isinstance(cfg.N, int)
    assert cfg.radii == (5.0, 10.0, 20.0)
    assert cfg.range_check is True
    assert cfg.stages == ("evolve",)


def test_overrides_need_an_equals_sign():
    with pytest.raises(ConfigError, match="key=value"):
        parse_overrides(["N1024"])


def test_file_then_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"potential": "quartic", "N": 2048, "dt": 0.02}), encoding="utf-8")
    cfg = parse_config(path, {"dt": "0.05"})
    assert cfg.potential == "quartic"
    assert cfg.N == 2048
    assert cfg.dt == 0.05


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="file not found"):
        parse_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config(broken)
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="JSON object"):
        parse_config(listed)


def test_manifest_echoes_config_and_constants():
    cfg = RunConfig(N=1024)
    manifest = build_manifest(cfg, "evolve", {"beta": 0.8})
    assert manifest["command"] == "evolve"
    assert manifest["config"]["N"] == 1024
    assert manifest["config"]["radii"] == list(cfg.radii)
    assert manifest["modules"]["evolution.DT_GUARD"] > 0
    assert manifest["beta"] == 0.8
    json.dumps(manifest)
