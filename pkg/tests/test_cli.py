import json
import subprocess
import sys

import pytest

from qcorr.cli import build_parser, main
from qcorr.states import be_2x4


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def manifest(capsys, *argv):
    code, out, err = run(capsys, *argv, "--quiet")
    assert code == 0, err
    return json.loads(out)


def test_parser_defaults_are_independent():
    p = build_parser()
    assert p.parse_args(["fit-scaling"]).set == "circle"
    assert p.parse_args(["eval-state", "--file", "x"]).set == "triad"


def test_sample_errors(tmp_path, capsys):
    m = manifest(capsys, "sample-errors", "--samples", "60", "--rank", "3", "--set", "sphere",
                 "--n1", "4", "--n2", "3", "--seed", "5", "--out", str(tmp_path))
    assert m["command"] == "sample-errors" and m["seed"] == 5
    assert set(m["versions"]) >= {"qcorr", "numpy", "scipy", "python"}
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0] == "sample_id,rank,ppt,measure,set_kind,n,ve" and len(lines) == 61
    assert (tmp_path / "histogram.csv").exists()
    assert m["result"]["samples"] == 60


def test_fit_scaling_power_law_and_linear(tmp_path, capsys):
    m = manifest(capsys, "fit-scaling", "--samples", "80", "--n-list", "2,4,8,16", "--n-inf", "256",
                 "--out", str(tmp_path / "a"))
    assert m["result"]["model"] == "power_law" and m["result"]["tau"] > 0
    fit = json.loads((tmp_path / "a" / "fit.json").read_text())
    assert fit["n_inf"] == 256
    m = manifest(capsys, "fit-scaling", "--samples", "80", "--set", "disc", "--n1", "10",
                 "--n2-list", "1,3,5,7", "--out", str(tmp_path / "b"))
    assert m["result"]["model"] == "linear"
    assert len((tmp_path / "b" / "scaling.csv").read_text().splitlines()) == 5


def test_landscape(tmp_path, capsys):
    m = manifest(capsys, "landscape", "--samples", "60", "--family", "rho_m", "--out", str(tmp_path))
    assert set(m["result"]["regions"]) == {"1", "2", "3", "4", "5", "union"}


def test_xstate_eval(tmp_path, capsys):
    m = manifest(capsys, "xstate-eval", "--a1", "0.4", "--a2", "0.1", "--a3", "0.2", "--a4", "0.3",
                 "--b1", "0.1", "--b2", "-0.05", "--out", str(tmp_path))
    assert m["result"]["states"] == 1
    m = manifest(capsys, "xstate-eval", "--random", "3", "--out", str(tmp_path))
    assert m["result"]["states"] == 3


def test_spin_scan(tmp_path, capsys):
    m = manifest(capsys, "spin-scan", "--L-list", "20,40,80,160", "--points", "41", "--out", str(tmp_path))
    assert m["result"]["measure"] == "CQWD"
    assert 1.0 < m["result"]["gamma"] < 2.0


def test_thermal_scan(tmp_path, capsys):
    m = manifest(capsys, "thermal-scan", "--h-max", "0.5", "--h-step", "0.25", "--out", str(tmp_path))
    assert len((tmp_path / "thermal.csv").read_text().splitlines()) == 26
    assert m["result"]["max_ve"] >= 0


def test_be_sweep(tmp_path, capsys):
    m = manifest(capsys, "be-sweep", "--state", "be24", "--b-step", "0.05", "--out", str(tmp_path))
    assert m["result"]["onset"] == pytest.approx(0.15)
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("param,triad_x") and len(rows) == 22


def test_eval_state(tmp_path, capsys):
    f = tmp_path / "state.json"
    f.write_text(be_2x4(0.3).to_json())
    m = manifest(capsys, "eval-state", "--file", str(f), "--measure", "qwd", "--out", str(tmp_path))
    assert m["result"]["measure"] == "QWD" and m["result"]["ve"] is None
    m = manifest(capsys, "eval-state", "--file", str(f), "--with-reference", "--out", str(tmp_path))
    assert m["result"]["ve"] >= 0
    assert json.loads((tmp_path / "eval.json").read_text()) == m["result"]


def test_invalid_flags_exit_2(tmp_path, capsys):
    assert run(capsys, "sample-errors", "--rank", "two")[0] == 2
    assert run(capsys, "no-such-command")[0] == 2
    code, _, err = run(capsys, "eval-state", "--file", str(tmp_path / "missing.json"), "--quiet")
    assert code == 2 and "invalid" in err
    code, _, err = run(capsys, "xstate-eval", "--a1", "0.5", "--quiet")
    assert code == 2
    code, _, err = run(capsys, "sample-errors", "--samples", "0", "--quiet")
    assert code == 2


def test_bad_jobs_environment(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("QCORR_JOBS", "many")
    assert run(capsys, "be-sweep", "--b-step", "0.5", "--out", str(tmp_path), "--quiet")[0] == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # the triad ignores n, so every mean equals eps_inf and the fit has no excess
    code, _, err = run(capsys, "fit-scaling", "--samples", "40", "--set", "triad", "--n-list", "2,4,8,16",
                       "--n-inf", "8", "--out", str(tmp_path), "--quiet")
    assert code == 3 and "numerical" in err
    code, _, _ = run(capsys, "sample-errors", "--samples", "150", "--ppt", "PPT", "--out", str(tmp_path), "--quiet")
    assert code == 3


def test_reruns_are_byte_identical_across_job_counts(monkeypatch, tmp_path, capsys):
    args = ["sample-errors", "--samples", "1100", "--rank", "2", "--set", "circle", "--n", "4", "--seed", "9"]
    manifest(capsys, *args, "--out", str(tmp_path / "a"))
    manifest(capsys, *args, "--out", str(tmp_path / "b"))
    monkeypatch.setenv("QCORR_JOBS", "2")
    m = manifest(capsys, *args, "--out", str(tmp_path / "c"))
    assert m["parameters"]["jobs"] == 2
    a = (tmp_path / "a" / "errors.csv").read_bytes()
    assert a == (tmp_path / "b" / "errors.csv").read_bytes()
    assert a == (tmp_path / "c" / "errors.csv").read_bytes()
    assert b"\r\n" not in a


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "qcorr", "be-sweep", "--b-step", "0.25", "--quiet",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["command"] == "be-sweep"
    res = subprocess.run([sys.executable, "-m", "qcorr", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "qcorr" in res.stdout
