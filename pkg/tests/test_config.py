"""Scenario configuration files."""

import pytest

from relchannel.config import Config
from relchannel.core.scenario import SeparationClass, classify_separation
from relchannel.errors import ConfigError

SCENARIO = """\
[channel]
energy_gap = 2.0

[field]
mass = 0.5

[detector2]
position = [3.0, 0.0, 0.0]
smearing = 0.01

[switching]
kind = "gaussian"
t_start = -1.0
t_end = 1.0
width = 0.2
"""


def write(tmp_path, text, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_default_config_is_valid():
    config = Config.default()
    assert config.validate()
    spec = config.to_scenario()
    assert spec.distance == 1.0
    assert spec.energy_gap == 1.0
    assert spec.detector1.is_pointlike
    assert classify_separation(spec) is SeparationClass.MIXED


def test_shipped_config_loads():
    from pathlib import Path

    config = Config.from_file(Path(__file__).resolve().parent.parent / "config.toml")
    spec = config.to_scenario()
    assert spec.switching.length == 4.0
    assert spec.quadrature.eps_rungs == 8


def test_partial_file_keeps_defaults(tmp_path):
    config = Config.from_file(write(tmp_path, SCENARIO))
    assert config.channel.energy_gap == 2.0
    assert config.detector1.position == [0.0, 0.0, 0.0]
    assert config.detector2.smearing == 0.01
    spec = config.to_scenario()
    assert spec.mass == 0.5
    assert spec.distance == 3.0
    assert spec.switching.width == 0.2
    assert spec.detector2.smearing == 0.01
    assert spec.detector1.smearing is None


def test_save_and_reload(tmp_path):
    config = Config.from_file(write(tmp_path, SCENARIO))
    out = tmp_path / "saved.toml"
    config.save_to_file(out)
    again = Config.from_file(out)
    assert again.to_dict() == config.to_dict()
    assert again.to_scenario() == config.to_scenario()


def test_none_values_are_omitted():
    data = Config.default().to_dict()
    assert "width" not in data["switching"]
    assert set(data) == {"channel", "field", "detector1", "detector2", "switching", "quadrature"}


def test_unknown_key_reports_line(tmp_path):
    text = "[channel]\nenergy_gap = 1.0\nbogus = 2\n"
    with pytest.raises(ConfigError, match="unknown key 'bogus'") as info:
        Config.from_file(write(tmp_path, text))
    assert info.value.line == 3
    assert str(info.value).startswith("line 3:")


def test_unknown_section_reports_line(tmp_path):
    text = "[channel]\nenergy_gap = 1.0\n\n[detector3]\ncoupling = 0.1\n"
    with pytest.raises(ConfigError, match=r"unknown section \[detector3\]") as info:
        Config.from_file(write(tmp_path, text))
    assert info.value.line == 4


def test_syntax_error_reports_line(tmp_path):
    text = "[channel]\nenergy_gap = \n"
    with pytest.raises(ConfigError) as info:
        Config.from_file(write(tmp_path, text))
    assert info.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        Config.from_file(tmp_path / "absent.toml")


def test_section_must_be_table(tmp_path):
    with pytest.raises(ConfigError, match="must be a table"):
        Config.from_dict({"channel": 3})


def test_validation_collects_errors(tmp_path):
    text = '[detector1]\nsmearing = "wide"\n\n[switching]\nkind = "square"\n'
    config = Config.from_file(write(tmp_path, text))
    with pytest.raises(ConfigError) as info:
        config.validate()
    message = str(info.value)
    assert "smearing" in message
    assert "Invalid switching kind: square" in message
    assert info.value.line == 2


def test_non_integer_seed():
    config = Config.from_dict({"channel": {"seed": 1.5}})
    with pytest.raises(ConfigError, match="seed must be an integer"):
        config.validate()


@pytest.mark.parametrize(
    "data, fragment",
    [
        ({"channel": {"energy_gap": -1.0}}, "energy gap"),
        ({"field": {"mass": -0.1}}, "mass"),
        ({"detector2": {"position": [0.0, 0.0, 0.0]}}, "separated"),
        ({"switching": {"t_start": 2.0, "t_end": 1.0}}, "t_start < t_end"),
        ({"detector1": {"coupling": -0.1}}, "coupling"),
    ],
)
def test_unphysical_values_become_config_errors(data, fragment):
    with pytest.raises(ConfigError, match=fragment):
        Config.from_dict(data).to_scenario()


def test_bad_quadrature_policy():
    with pytest.raises(ConfigError):
        Config.from_dict({"quadrature": {"rel_tol": -1.0}}).to_scenario()


def test_setters():
    config = Config.default()
    config.detector1.position = [1.0, 2.0, 3.0]
    config.set_separation(0.5)
    assert config.detector2.position == [1.5, 2.0, 3.0]
    config.switching.t_start = 1.0
    config.set_window(2.0)
    assert config.switching.t_end == 3.0
    config.set_coupling(0.05)
    assert config.detector1.coupling == config.detector2.coupling == 0.05
    config.set_smearing(1e-3)
    spec = config.to_scenario()
    assert spec.detector1.smearing == spec.detector2.smearing == 1e-3
    with pytest.raises(ConfigError):
        config.set_smearing(0.0)
