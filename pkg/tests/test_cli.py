"""Command-line interface: exit codes, overrides, file outputs."""

import json

import pytest
from click.testing import CliRunner

from vfdcf.cli import main
from vfdcf.config import ExperimentConfig, PenaltyConfig

from conftest import make_system


@pytest.fixture
def config_file(tmp_path):
    cfg = ExperimentConfig(system=make_system(num_aps=3), schemes=["hd"],
                           realizations=1, base_seed=1,
                           output_dir=str(tmp_path / "out"),
                           penalty=PenaltyConfig(num_starts=1))
    path = tmp_path / "config.json"
    cfg.to_json(path)
    return path


def test_config_json_roundtrip(config_file):
    cfg = ExperimentConfig.from_json(config_file)
    assert cfg.schemes == ["hd"]
    assert cfg.system.num_aps == 3


def test_run_command(config_file, tmp_path):
    out = tmp_path / "results"
    r = CliRunner().invoke(main, ["run", "--config", str(config_file),
                                  "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert (out / "samples.csv").exists()
    assert (out / "cdf.csv").exists()
    assert (out / "summary.json").exists()
    assert "hd:" in r.output


def test_run_overrides(config_file, tmp_path):
    out = tmp_path / "results2"
    r = CliRunner().invoke(main, [
        "run", "--config", str(config_file), "--scheme", "hd",
        "--realizations", "2", "--seed", "9", "--workers", "1",
        "--out", str(out)])
    assert r.exit_code == 0, r.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["realizations"] == 2
    assert summary["base_seed"] == 9


def test_run_rejects_unknown_scheme(config_file):
    r = CliRunner().invoke(main, ["run", "--config", str(config_file),
                                  "--scheme", "nope"])
    assert r.exit_code != 0
    assert "unknown scheme" in r.output


def test_run_rejects_missing_config(tmp_path):
    r = CliRunner().invoke(main, ["run", "--config",
                                  str(tmp_path / "absent.json")])
    assert r.exit_code != 0


def test_run_rejects_malformed_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"schemes\": []}")
    r = CliRunner().invoke(main, ["run", "--config", str(bad)])
    assert r.exit_code != 0
    assert "bad config" in r.output


def test_validate_moments_command(config_file):
    r = CliRunner().invoke(main, ["validate-moments", "--config",
                                  str(config_file), "--draws", "20000"])
    assert r.exit_code == 0, r.output
    assert "all moments within" in r.output


def test_enumerate_command(tmp_path):
    cfg = ExperimentConfig(system=make_system(num_aps=2, num_dl_ues=1,
                                              num_ul_ues=1),
                           schemes=["vfd"], realizations=1, base_seed=3,
                           penalty=PenaltyConfig(num_starts=1))
    path = tmp_path / "tiny.json"
    cfg.to_json(path)
    r = CliRunner().invoke(main, ["enumerate", "--config", str(path)])
    assert r.exit_code == 0, r.output
    assert "a=01" in r.output and "a=10" in r.output
    assert "best:" in r.output


def test_enumerate_rejects_large_m(tmp_path):
    cfg = ExperimentConfig(system=make_system(num_aps=13), schemes=["vfd"],
                           realizations=1)
    path = tmp_path / "big.json"
    cfg.to_json(path)
    r = CliRunner().invoke(main, ["enumerate", "--config", str(path)])
    assert r.exit_code != 0
