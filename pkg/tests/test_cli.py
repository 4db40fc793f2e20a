import json

import numpy as np
import pytest

from qwmix import cli


def run_cli(args):
    return cli.main(list(args))


def test_parse_precedence_file_then_flag(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("[params]\ngamma_s = 10\n")
    cfg = cli.parse_config("triplet", str(cfg_file), ["gamma_s=100"])
    assert cfg.params.gamma_s == 100.0
    assert cfg.provenance["params.gamma_s"] == "flag"
    cfg2 = cli.parse_config("triplet", str(cfg_file), [])
    assert cfg2.params.gamma_s == 10.0
    assert cfg2.provenance["params.gamma_s"] == "file"
    assert cfg2.provenance["params.mu"] == "default"


def test_parse_unknown_key(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("[params]\ngamma_x = 10\n")
    with pytest.raises(cli.ParseError):
        cli.parse_config("triplet", str(cfg_file), [])
    with pytest.raises(cli.ParseError):
        cli.parse_config("triplet", None, ["spectrum.k_max=3"])


def test_parse_conflicting_subcommands(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("[params]\ngamma_s = 2\n[sweep]\nn_omega_s = 2\n")
    with pytest.raises(cli.ConflictingSubcommands):
        cli.parse_config("spectrum", str(cfg_file), [])


def test_invalid_param_exits_1_with_json_envelope(tmp_path, capsys):
    code = run_cli(["triplet", "--set", "mu=1.5", "--format", "json"])
    assert code == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["error"]["type"] == "InvalidParam"
    assert doc["error"]["field"] == "mu"


def test_triplet_resonance_contains_zero_elastic_row(tmp_path):
    out = tmp_path / "triplet.csv"
    code = run_cli(["triplet", "--set", "omega_rabi_s=3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    row = next(ln for ln in body if ln.startswith("i_rc,"))
    assert float(row.split(",")[1]) == 0.0
    assert any(ln.startswith("# qwmix") for ln in lines)


def test_spectrum_roundtrip_from_embedded_config(tmp_path):
    out1 = tmp_path / "a.csv"
    args = ["spectrum",
            "--set", "gamma_s=2", "--set", "omega_rabi_s=4",
            "--set", "omega_rabi_pr=0.2", "--set", "delta_omega=0.5",
            "--set", "spectrum.n_samples=512", "--set", "spectrum.k_max=5",
            "--out", str(out1)]
    assert run_cli(args) == 0
    text = out1.read_text()
    # Reconstruct a config file from the embedded block and re-run.
    embedded = []
    for ln in text.splitlines():
        if ln.startswith("# [") or (ln.startswith("# ") and "=" in ln and "provenance" not in ln
                                    and not ln.startswith("# command") and not ln.startswith("# qwmix")):
            embedded.append(ln[2:])
    cfg_file = tmp_path / "embedded.ini"
    cfg_file.write_text("\n".join(embedded) + "\n")
    out2 = tmp_path / "b.csv"
    assert run_cli(["spectrum", "--config", str(cfg_file), "--out", str(out2)]) == 0
    data1 = [ln for ln in text.splitlines() if not ln.startswith("#")]
    data2 = [ln for ln in out2.read_text().splitlines() if not ln.startswith("#")]
    assert data1 == data2


def test_spectrum_json_structure(tmp_path):
    out = tmp_path / "spec.json"
    args = ["spectrum", "--format", "json",
            "--set", "gamma_s=2", "--set", "omega_rabi_s=4",
            "--set", "omega_rabi_pr=0.2", "--set", "delta_omega=0.5",
            "--set", "spectrum.n_samples=512", "--out", str(out)]
    assert run_cli(args) == 0
    doc = json.loads(out.read_text())
    assert doc["version"]
    assert doc["config"]["params"]["gamma_s"] == 2.0
    assert "1" in doc["results"]["peaks"]
    assert doc["results"]["periodicity_residual"] < 1e-6


def test_convergence_failure_exits_2(capsys):
    code = run_cli(["spectrum", "--format", "json",
                    "--set", "gamma_s=2", "--set", "omega_rabi_s=4",
                    "--set", "omega_rabi_pr=0.2", "--set", "delta_omega=0.5",
                    "--set", "spectrum.n_samples=512",
                    "--set", "spectrum.transient=0.05",
                    "--set", "spectrum.residual_tol=1e-31"])
    assert code == 2
    doc = json.loads(capsys.readouterr().out)
    assert doc["error"]["type"] == "NotConverged"


def test_simulate_writes_trajectory(tmp_path):
    out = tmp_path / "traj.csv"
    code = run_cli(["simulate", "--set", "gamma_s=2", "--set", "omega_rabi_s=1",
                    "--set", "omega_rabi_pr=0.3", "--set", "delta_omega=0.4",
                    "--set", "simulate.tau_max=5", "--set", "simulate.n_samples=50",
                    "--out", str(out)])
    assert code == 0
    body = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert body[0].split(",")[0] == "tau"
    assert len(body) == 52


def test_sweep_rerun_byte_identical(tmp_path):
    cfg_file = tmp_path / "sweep.ini"
    cfg_file.write_text(
        "[params]\ngamma_s = 2\nomega_rabi_pr = 0.1\ndelta_omega = 0.5\nmu = 1\n"
        "[sweep]\nomega_s_min = 1\nomega_s_max = 4\nn_omega_s = 2\n"
        "omega_pr_min = 0.1\nomega_pr_max = 0.1\nn_omega_pr = 1\n"
        "k_max = 5\nn_samples = 512\n"
    )
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    assert run_cli(["sweep", "--config", str(cfg_file), "--out", str(out1)]) == 0
    assert run_cli(["sweep", "--config", str(cfg_file), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_oracle_check_small_grid(tmp_path):
    out = tmp_path / "oracle.csv"
    code = run_cli(["oracle-check", "--out", str(out),
                    "--set", "oracle-check.gamma_ratios=1",
                    "--set", "oracle-check.drive_ratios=0.5",
                    "--set", "oracle-check.probe_drives=0.2",
                    "--set", "oracle-check.tau_max=5",
                    "--set", "oracle-check.n_check=16"])
    assert code == 0
    body = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    last = body[-1].split(",")
    assert last[0] == "max"
    assert float(last[-1]) < 1e-6
