import json

import pytest

from lh2transfer.config import ConfigError, ScenarioConfig, load_config, parse_override


def test_defaults():
    c = ScenarioConfig().validate()
    assert c.onshore.volume == 50000.0
    assert c.seaborne.max_working_pressure == 1.15e5
    assert c.control.mode == "split-range"
    assert c.ugsa.n == 1000 and len(c.ugsa.parameters) == 6


def test_replace_does_not_mutate():
    c = ScenarioConfig()
    d = c.replace(**{"control.mode": "fixed-speed", "pump__peak_efficiency": 0.5})
    assert d.control.mode == "fixed-speed" and d.pump.peak_efficiency == 0.5
    assert c.control.mode == "split-range"
    assert d.digest() != c.digest()


@pytest.mark.parametrize("key", ["nope.x", "pump.nope"])
def test_replace_unknown(key):
    with pytest.raises(ConfigError, match=key):
        ScenarioConfig().replace(**{key: 1.0})


@pytest.mark.parametrize("text, expected", [
    ("pump.peak_efficiency=0.55", ("pump.peak_efficiency", 0.55)),
    ("control.mode = \"fixed-speed\"", ("control.mode", "fixed-speed")),
    ("control.mode=fixed-speed", ("control.mode", "fixed-speed")),
    ("lh2_pipe.n_cells=10", ("lh2_pipe.n_cells", 10)),
])
def test_parse_override(text, expected):
    assert parse_override(text) == expected


def test_parse_override_needs_equals():
    with pytest.raises(ConfigError):
        parse_override("pump.peak_efficiency")


def test_load_toml_and_json(tmp_path):
    t = tmp_path / "s.toml"
    t.write_text('[control]\nmode = "fixed-speed"\n[seaborne]\nmax_working_pressure = 1.3e5\n')
    a = load_config(t)
    assert a.control.mode == "fixed-speed" and a.seaborne.max_working_pressure == 1.3e5
    assert a.pump.peak_efficiency == 0.60
    j = tmp_path / "s.json"
    j.write_text(json.dumps(a.to_dict()))
    assert load_config(j) == a
    assert load_config(j).digest() == a.digest()
    b = load_config(t, ["seaborne.max_working_pressure=1.2e5"])
    assert b.seaborne.max_working_pressure == 1.2e5


@pytest.mark.parametrize("body, where", [
    ("[pump]\nspeed = 3\n", "pump.speed"),
    ("[pumps]\nx = 1\n", "pumps"),
    ("[pump]\npeak_efficiency = 1.5\n", "pump.peak_efficiency"),
    ("[pump]\npeak_efficiency = \"high\"\n", "pump.peak_efficiency"),
    ("[lh2_pipe]\nn_cells = 2.5\n", "lh2_pipe.n_cells"),
    ("[control]\nmode = \"auto\"\n", "control.mode"),
    ("[seaborne]\nstop_fill = 0.005\n", "seaborne.stop_fill"),
    ("[run]\ncomm_interval = -1\n", "run.comm_interval"),
    ("[ugsa]\nn = 1\n", "ugsa.n"),
    ("[ugsa]\nparameters = [{name = \"pump.colour\", low = 0, high = 1}]\n", "ugsa.parameters"),
    ("[ugsa]\nparameters = [{name = \"pipe.roughness\", low = 2e-4, high = 1e-4}]\n", "ugsa.parameters"),
    ("[pump\n", "s.toml"),
])
def test_bad_config_names_field(tmp_path, body, where):
    p = tmp_path / "s.toml"
    p.write_text(body)
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        load_config(p)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


def test_digest_stable():
    a, b = ScenarioConfig(), ScenarioConfig()
    assert a.digest() == b.digest()
    assert len(a.digest()) == 12
    assert a.replace(**{"pump.peak_efficiency": 0.6}).digest() == a.digest()
