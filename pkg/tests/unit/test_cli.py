"""Tests for the rabi-qst command line."""

import json

import pytest
from rabi_qst.cli import app
from rabi_qst.utils.config import Config
from typer.testing import CliRunner

runner = CliRunner()


@pytest.fixture
def traces_dir(tmp_path):
    """Noiseless traces of the default state (58°, 249°)."""
    out = tmp_path / "traces"
    result = runner.invoke(app, ["simulate", "--seed", "1", "-o", str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_simulate_writes_three_traces(traces_dir):
    """Test simulate writes ref, x and y CSV files."""
    assert sorted(p.name for p in traces_dir.iterdir()) == ["ref.csv", "x.csv", "y.csv"]
    assert (traces_dir / "x.csv").read_text().splitlines()[0] == "time_us,signal"


def test_simulate_is_deterministic(tmp_path):
    """Test two runs with the same seed write byte-identical files."""
    for name in ("a", "b"):
        result = runner.invoke(app, ["simulate", "--sigma", "0.01", "--seed", "7", "-o", str(tmp_path / name)])
        assert result.exit_code == 0, result.output
    for label in ("ref", "x", "y"):
        assert (tmp_path / "a" / f"{label}.csv").read_bytes() == (tmp_path / "b" / f"{label}.csv").read_bytes()


def test_simulate_json_format(tmp_path):
    """Test --format json writes JSON traces without the reference."""
    result = runner.invoke(app, ["simulate", "--format", "json", "--no-ref", "-o", str(tmp_path)])
    assert result.exit_code == 0, result.output
    data = json.loads((tmp_path / "x.json").read_text())
    assert len(data["times"]) == 61
    assert not (tmp_path / "ref.json").exists()


def test_fit_command(traces_dir, tmp_path):
    """Test fit writes one fit per trace with a shared frequency."""
    out = tmp_path / "fits.json"
    files = [str(traces_dir / f"{label}.csv") for label in ("ref", "x", "y")]
    result = runner.invoke(app, ["fit", *files, "-o", str(out)])
    assert result.exit_code == 0, result.output
    fits = json.loads(out.read_text())
    assert set(fits) == {"ref", "x", "y"}
    assert len({f["frequency"] for f in fits.values()}) == 1


def test_tomo_rpqst_reaches_target(traces_dir, tmp_path):
    """Test RPQST on the simulated traces reproduces the prepared state."""
    out = tmp_path / "tomo.json"
    result = runner.invoke(
        app,
        [
            "tomo",
            "--x", str(traces_dir / "x.csv"),
            "--y", str(traces_dir / "y.csv"),
            "--method", "rpqst",
            "--theta", "58",
            "--phi", "249",
            "-o", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["results"]["rpqst"]["fidelity_vs_target"] >= 0.99999999
    assert data["results"]["rpqst"]["angles_deg"]["theta"] == pytest.approx(58.0, abs=1e-4)


def test_tomo_all_methods(traces_dir, tmp_path):
    """Test --method all runs the three reconstructions."""
    out = tmp_path / "tomo.json"
    args = ["tomo", "--x", str(traces_dir / "x.csv"), "--y", str(traces_dir / "y.csv")]
    result = runner.invoke(app, [*args, "--ref", str(traces_dir / "ref.csv"), "--method", "all", "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert set(json.loads(out.read_text())["results"]) == {"raqst", "rpqst", "standard"}


def test_tomo_raqst_without_reference(traces_dir, tmp_path):
    """Test RAQST without a reference trace fails naming the missing input."""
    result = runner.invoke(
        app,
        [
            "tomo",
            "--x", str(traces_dir / "x.csv"),
            "--y", str(traces_dir / "y.csv"),
            "--method", "raqst",
            "-o", str(tmp_path / "tomo.json"),
        ],
    )
    assert result.exit_code != 0
    assert "ref" in result.output


def test_tomo_missing_file(tmp_path):
    """Test an absent trace file is a configuration error."""
    result = runner.invoke(app, ["tomo", "--x", str(tmp_path / "nope.csv"), "--y", str(tmp_path / "nope.csv")])
    assert result.exit_code == 2


def test_sweep_csv(tmp_path):
    """Test the sweep writes 35 polar angles for the default 5° step."""
    out = tmp_path / "sweep.csv"
    result = runner.invoke(app, ["sweep", "--method", "rpqst", "--quantity", "phase", "--eps", "0.1", "-o", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == "theta_deg,fidelity"
    assert len(lines) == 36


def test_sweep_both_signs(tmp_path):
    """Test --both-signs emits one row per sign."""
    out = tmp_path / "sweep.csv"
    result = runner.invoke(app, ["sweep", "--step", "30", "--both-signs", "-o", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == "theta_deg,fidelity,sign"
    assert len(lines) == 1 + 2 * 5


def test_mc_json(tmp_path):
    """Test the Monte Carlo command writes statistics per method."""
    out = tmp_path / "mc.json"
    result = runner.invoke(
        app, ["mc", "--n", "3", "--method", "rpqst", "--min-polar", "5", "--format", "json", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["stats"]["rpqst"]["count"] == 3
    assert len(data["records"]) == 3


def test_mc_octants(tmp_path):
    """Test --octants writes one row per state and method."""
    out = tmp_path / "octants.csv"
    result = runner.invoke(app, ["mc", "--octants", "--method", "rpqst", "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert len(out.read_text().splitlines()) == 1 + 13


def test_circuit_dump_states(tmp_path):
    """Test the circuit dump covers every gate and initialises a mixed input."""
    out = tmp_path / "circuit.json"
    result = runner.invoke(app, ["circuit", "--input", "mixed", "--dump-states", "-o", str(out)])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert [s["step"] for s in data["init_sequence"]] == ["input", "pump", "U1", "U2", "U3", "U4", "U5"]
    assert [s["step"] for s in data["nuclear_sequence"]] == ["initial", "V1", "V2", "V3", "V4"]
    assert data["init_sequence"][-1]["population_00"] == pytest.approx(1.0, abs=1e-12)
    assert len(data["basis"]) == 9


def test_circuit_bad_input():
    """Test a malformed register input exits with the configuration code."""
    result = runner.invoke(app, ["circuit", "--input", "up"])
    assert result.exit_code == 2


def test_config_file_precedence(tmp_path):
    """Test the file overrides defaults and flags override the file."""
    cfg = tmp_path / "run.env"
    cfg.write_text("THETA=30\nPHI=160\nPOINTS=41\n")
    out = tmp_path / "traces"
    result = runner.invoke(app, ["--config", str(cfg), "simulate", "--points", "33", "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert len((out / "x.csv").read_text().splitlines()) == 1 + 33


def test_config_file_unknown_key(tmp_path):
    """Test an unknown key is a configuration error."""
    cfg = tmp_path / "run.env"
    cfg.write_text("COLOUR=blue\n")
    result = runner.invoke(app, ["--config", str(cfg), "sweep"])
    assert result.exit_code == 2


def test_tomo_with_one_target_angle_warns(traces_dir, tmp_path):
    """Test --theta without --phi warns and writes no fidelity report."""
    out = tmp_path / "tomo.json"
    args = ["tomo", "--x", str(traces_dir / "x.csv"), "--y", str(traces_dir / "y.csv"), "--method", "rpqst"]
    result = runner.invoke(app, [*args, "--theta", "58", "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert "only --theta given" in result.output
    data = json.loads(out.read_text())
    assert not data["reports"]
    assert data["results"]["rpqst"]["fidelity_vs_target"] is None


def test_undecodable_trace_file(tmp_path):
    """Test a trace file that is not UTF-8 exits with the configuration code."""
    bad = tmp_path / "bad.csv"
    bad.write_bytes(b"\xff\xfe\x00bad")
    result = runner.invoke(app, ["fit", str(bad)])
    assert result.exit_code == 2
    assert "UTF-8" in result.output


@pytest.mark.parametrize(("name", "value"), [("LOG_LEVEL", "LOUD"), ("TOLERANCE", 0.5)])
def test_invalid_settings_exit_with_configuration_code(monkeypatch, name, value):
    """Test a bad log level or tolerance stops every command with exit code 2."""
    monkeypatch.setattr(Config, name, value)
    result = runner.invoke(app, ["sweep"])
    assert result.exit_code == 2
    assert "Configuration error" in result.output
