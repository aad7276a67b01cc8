import csv
import json

import pytest

from disentangle import cli


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_defaults_are_ratios():
    assert cli.defaults("phase-scan")["t_over_U"] == 1e-3
    assert cli.defaults("cpr")["t0_over_t"] == 0.8
    assert cli.defaults("cpr")["gamma_ratio"] == 10.0
    assert cli.defaults("free-energy")["mu_over_mu_c"] == 1.1
    assert "tol_scale" in cli.defaults("cpr") and "tol_scale" not in cli.defaults("spectrum")
    with pytest.raises(cli.ConfigError):
        cli.defaults("nope")


@pytest.mark.parametrize(
    "argv",
    [
        ["nope"],
        ["spectrum", "--mu-steps", "3"],
        ["spectrum", "--mu-points", "many"],
        ["spectrum", "--mu-points"],
        ["spectrum", "--mu-min", "1", "--mu-max", "0"],
        ["beenakker", "--tau", "2"],
        ["phase-scan", "--tol-scale", "-1"],
        ["phase-scan", "--confine", "maybe"],
        [],
    ],
)
def test_config_errors_write_nothing(tmp_path, argv):
    out = tmp_path / "out"
    assert cli.main(argv + ["--out", str(out)]) == 1
    assert not out.exists()


def test_spectrum(tmp_path):
    assert cli.main(["spectrum", "--mu-points", "5", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "spectrum.csv")
    assert rows[0] == ["mu_over_t"] + [f"E{j}" for j in range(8)]
    assert len(rows) == 6
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["experiment"] == "spectrum" and man["config"]["mu_points"] == 5
    assert man["unconverged_points"] == 0


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nmu_points = 4\nmu-max = 0.5\n")
    assert cli.main(["spectrum", "--config", str(cfg), "--mu-points=3", "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config"]["mu_points"] == 3 and man["config"]["mu_max"] == 0.5


def test_manifest_of_other_experiment_is_rejected(tmp_path):
    assert cli.main(["beenakker", "--nu-points", "5", "--out", str(tmp_path)]) == 0
    assert cli.main(["spectrum", "--config", str(tmp_path / "manifest.json"), "--out", str(tmp_path / "b")]) == 1


def test_phase_scan_columns(tmp_path):
    argv = ["phase-scan", "--ratio-max", "2", "--ratio-points", "2", "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    rows = read_rows(tmp_path / "phase-scan.csv")
    assert rows[0] == ["ratio", "energy_over_U", "purity", "order_param", "converged"]
    assert [r[-1] for r in rows[1:]] == ["true", "true"]


def test_unconverged_points_give_status_2(tmp_path):
    argv = ["phase-scan", "--ratio-max", "8", "--ratio-points", "2", "--t-max", "0.01", "--out", str(tmp_path)]
    assert cli.main(argv) == 2
    rows = read_rows(tmp_path / "phase-scan.csv")
    assert "false" in [r[-1] for r in rows[1:]]
    assert json.loads((tmp_path / "manifest.json").read_text())["unconverged_points"] >= 1


def test_cpr_columns(tmp_path):
    argv = ["cpr", "--L", "4", "--nu-points", "4", "--beta-t", "20", "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    rows = read_rows(tmp_path / "cpr.csv")
    assert rows[0] == ["nu", "energy", "current_normalized", "converged"]
    assert len(rows) == 5
