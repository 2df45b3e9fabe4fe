import json

import pytest

from hcqnc.cli import main


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "fig2.json"
    path.write_text(json.dumps({"y": 0.5, "squeezing": {"n": 10}}))
    return str(path)


def test_version(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert "hbar" in out and "k_B" in out and "c =" in out


def test_spectrum_rows(cfg, capsys):
    assert main(["spectrum", "--config", cfg, "--omega", "0.9:1.1:2001", "--theta", "opt", "--mode", "perfect"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2002
    assert lines[0].startswith("s_th,s_f,s_at,s_b,s_h,s_fb,s_fh,s_bh,total")


def test_json_round_trip(cfg, tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert main(["advantage", "--config", cfg, "--omega-offset", "4", "--format", "json", "--out", str(first)]) == 0
    assert main(["advantage", "--config", str(first), "--omega-offset", "4", "--format", "json",
                 "--out", str(second)]) == 0
    assert first.read_text() == second.read_text()


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus": 1}')
    assert main(["spectrum", "--config", str(bad)]) == 2
    assert "bogus" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["spectrum", "--omega", "1:0.5:3"]) == 2


def test_numerical_failure_exit(cfg, capsys, monkeypatch):
    import numpy as np

    import hcqnc.optimize as op

    monkeypatch.setattr(op, "kprime_lprime", lambda *a, **k: (np.array(1.0), np.array(-1.0)))
    assert main(["advantage", "--omega-offset", "4"]) == 3
    assert main(["advantage", "--omega-offset", "4", "--allow-fallback"]) == 0


def test_singular_quadrature_exit(cfg):
    import math

    assert main(["spectrum", "--config", cfg, "--omega-offset", "4", "--theta", str(math.atan(1.0))]) == 3


def test_nmin(tmp_path, capsys):
    path = tmp_path / "mm.json"
    path.write_text(json.dumps({"coupling_ratio": 1.001, "decay_ratio": 1.01}))
    assert main(["nmin", "--config", str(path), "--omega-offset", "4"]) == 0
    row = capsys.readouterr().out.strip().splitlines()[1].split(",")
    assert float(row[1]) > 0 and row[2] == "True"


def test_oracle_check(cfg, capsys):
    assert main(["oracle-check", "--config", cfg, "--tolerance", "0.05"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] and report["tiers"]["exact"]["tolerance"] == 0.05
    assert len(report["points"]) == 42


def test_figure_with_sidecar(tmp_path):
    out = tmp_path / "fig17.csv"
    assert main(["figure", "fig17", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "fig17.csv.meta.json").read_text())
    assert meta["artifact_version"] and len(meta["specs"]) == 2
    assert out.read_text().startswith("label,omega")


def test_sweep_command(tmp_path, capsys):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"axis1": {"name": "N", "min": 0.1, "max": 1.0, "points": 3},
                                "quantity": "advantage_db", "fixed": {"omega_offset": 4.0, "decay_mismatch": 0.1}}))
    assert main(["sweep", "--spec", str(spec), "--format", "json"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and "advantage_db" in json.loads(lines[0])
    spec.write_text(json.dumps({"axis1": {"name": "nope", "min": 0, "max": 1, "points": 3}, "quantity": "R_c"}))
    assert main(["sweep", "--spec", str(spec)]) == 2


def test_signal_and_bands(cfg, capsys):
    assert main(["signal", "--config", cfg, "--omega-offset", "0", "--theta", "opt", "--mode", "perfect"]) == 0
    assert main(["bands", "--config", cfg, "--mode", "perfect", "--span", "5000", "--step", "1"]) == 0
    out = capsys.readouterr().out
    assert "R_c" in out and "bandwidth_gamma_m" in out


def test_sensitivity(cfg, capsys):
    assert main(["sensitivity", "--config", cfg, "--omega", "0.8:0.8:1", "--theta", "opt", "--mode", "perfect"]) == 0
    assert "improvement_percent" in capsys.readouterr().out
