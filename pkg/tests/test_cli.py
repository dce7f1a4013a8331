"""Command-line interface."""

import cmath
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest
from scipy import integrate

from relchannel import __version__, cli
from relchannel.cli import create_parser, main
from relchannel.config import Config
from relchannel.core.scenario import SwitchingSpec

ROOT = Path(__file__).resolve().parent.parent

SPACELIKE = """\
[detector2]
position = [2.0, 0.0, 0.0]

[switching]
kind = "smooth-bump"
t_start = 0.0
t_end = 1.0
"""


@pytest.fixture
def spacelike(tmp_path):
    path = tmp_path / "spacelike.toml"
    path.write_text(SPACELIKE, encoding="utf-8")
    return str(path)


def rows_of(text):
    return [line.split("\t") for line in text.splitlines() if not line.startswith("#")]


def test_parser_defaults():
    args = create_parser().parse_args(["capacity-scan"])
    assert args.steps == 16
    assert args.window_min == 0.25 and args.window_max == 4.0
    assert args.out == "tsv"
    args = create_parser().parse_args(["negativity-scan", "--L-min", "1e-3", "--window-steps", "4"])
    assert args.distance_min == 1e-3 and args.steps == 4


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert f"relchannel {__version__}" in capsys.readouterr().out


def test_missing_config_file(tmp_path, capsys):
    code = main(["fermi", "--config", str(tmp_path / "nope.toml")])
    assert code == 2
    assert "ConfigError" in capsys.readouterr().err


def test_invalid_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[channel]\nenergy_gap = -1.0\n", encoding="utf-8")
    assert main(["fermi", "--config", str(path)]) == 2
    assert "energy gap" in capsys.readouterr().err


def test_fermi_spacelike(spacelike, capsys):
    assert main(["fermi", "--config", spacelike]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# relchannel fermi (schema 1)")
    (row,) = rows_of(out)
    assert row[2] == "spacelike"
    assert float(row[3]) > 0
    assert row[-2] == "ok"


def test_glauber_json(spacelike, capsys):
    assert main(["glauber", "--config", spacelike, "--out", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    (row,) = payload["rows"]
    assert row["separation"] == "spacelike"
    assert abs(complex(row["leakage_re"], row["leakage_im"])) > 0


def test_overrides_and_write_config(spacelike, tmp_path, capsys):
    saved = tmp_path / "resolved.toml"
    code = main(["fermi", "--config", spacelike, "--L", "3", "--alpha", "0.05", "--write-config", str(saved)])
    assert code == 0
    capsys.readouterr()
    resolved = Config.from_file(saved)
    assert resolved.detector1.coupling == resolved.detector2.coupling == 0.05
    assert resolved.detector2.position == [3.0, 0.0, 0.0]


def test_output_file(spacelike, tmp_path, capsys):
    target = tmp_path / "fermi.tsv"
    assert main(["fermi", "--config", spacelike, "--output", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert target.read_text(encoding="utf-8").startswith("# relchannel fermi")


def test_negativity_scan_needs_smearing(spacelike, capsys):
    assert main(["negativity-scan", "--config", spacelike, "--steps", "3"]) == 2
    assert "smeared" in capsys.readouterr().err


def test_scan_rejects_single_step(spacelike, capsys):
    assert main(["casimir-scan", "--config", spacelike, "--steps", "1"]) == 2


def test_negativity_scan_crosses_threshold(spacelike, capsys):
    code = main(["negativity-scan", "--config", spacelike, "--dE", "1", "--dX", "1e-3",
                 "--alpha", "0.01", "--L-min", "0.1", "--L-max", "0.4", "--steps", "4", "--out", "json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["metadata"]["L_threshold"] == pytest.approx(0.2274, abs=1e-4)
    signs = [row["R_abs_minus_S"] > 0 for row in payload["rows"]]
    assert signs[0] and not signs[-1]
    assert all(row["status"] == "ok" for row in payload["rows"])


def test_casimir_scan_is_deterministic(spacelike, capsys):
    argv = ["casimir-scan", "--config", spacelike, "--L-min", "10", "--L-max", "40", "--steps", "3"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    energies = [float(row[5]) for row in rows_of(first)]
    assert all(e < 0 for e in energies)


@pytest.mark.slow
def test_parallel_scan_matches_serial(spacelike, capsys):
    argv = ["casimir-scan", "--config", spacelike, "--L-min", "10", "--L-max", "40", "--steps", "4"]
    assert main(argv) == 0
    serial = capsys.readouterr().out
    assert main(argv + ["--jobs", "2"]) == 0
    assert capsys.readouterr().out == serial


@pytest.mark.slow
def test_channel_report_spacelike(spacelike, capsys):
    assert main(["channel", "--config", spacelike]) == 0
    report = {row[0]: row[1] for row in rows_of(capsys.readouterr().out)}
    assert report["separation"] == "spacelike"
    assert complex(report["C"]) == 0 and complex(report["D"]) == 0
    assert report["choi_rank"] == "4"
    assert report["cptp"] == "true"
    assert float(report["capacity_bits"]) < 1e-9


@pytest.mark.slow
def test_channel_report_shipped_config(capsys):
    config = ROOT / "config.toml"
    assert main(["channel", "--config", str(config)]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert all(row[3] == "ok" for row in rows)
    report = {row[0]: row[1] for row in rows}
    assert report["separation"] == "mixed"
    assert report["window"] == "4"
    assert report["choi_rank"] == "4"
    assert report["cptp"] == "true"

    # C = α₁α₂ i/(4πL) e^{−iΔE L} ∫ η(t) η(t − L) dt for the bump on [0, 4], L = 1
    eta = SwitchingSpec(kind="smooth-bump", t_start=0.0, t_end=4.0)
    overlap = integrate.quad(lambda t: eta(t) * eta(t - 1.0), 1.0, 4.0, epsabs=1e-14, epsrel=1e-12)[0]
    expected = 0.01 * 1j / (4 * math.pi) * cmath.exp(-1j) * overlap
    assert complex(report["C"]) == pytest.approx(expected, rel=1e-5)

    capacity = float(report["capacity_bits"])
    assert capacity > 0
    assert float(report["rate"]) == pytest.approx(capacity / 4.0, rel=1e-9)


@pytest.mark.slow
def test_capacity_scan_rows(tmp_path, capsys):
    path = tmp_path / "timelike.toml"
    path.write_text("[detector2]\nposition = [1.0, 0.0, 0.0]\n", encoding="utf-8")
    code = main(["capacity-scan", "--config", str(path), "--window-min", "0.5", "--window-max", "2.5",
                 "--steps", "3", "--out", "json"])
    assert code == 0
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert [row["window"] for row in rows] == [0.5, 1.5, 2.5]
    assert all(row["status"] == "ok" for row in rows)
    assert rows[0]["separation"] == "spacelike"
    assert rows[0]["capacity"] < 1e-9
    for row in rows[1:]:
        assert row["rate"] > 0
        assert row["rate"] == pytest.approx(row["capacity"] / row["window"])


def test_failing_point_becomes_error_row(monkeypatch):
    def broken(config_data, value, options):
        raise ValueError("ladder needs at least 3 rungs, got 2")

    monkeypatch.setitem(cli.SCAN_POINTS, "casimir-scan", (broken, "L"))
    rows = cli.run_scan("casimir-scan", Config.default(), [10.0, 20.0], {})
    assert [row["L"] for row in rows] == [10.0, 20.0]
    assert all(row["status"] == "error" for row in rows)
    assert rows[0]["message"] == "ValueError: ladder needs at least 3 rungs, got 2"


def test_module_entry_point(spacelike):
    proc = subprocess.run(
        [sys.executable, "-m", "relchannel.cli", "fermi", "--config", spacelike, "--quiet"],
        capture_output=True, text=True, cwd=ROOT, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("# relchannel fermi")
