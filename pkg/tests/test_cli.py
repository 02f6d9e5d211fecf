import json
import subprocess
import sys

import numpy as np
import pytest

from ellwishart.cli import main
from ellwishart.io import read_matrix_file, write_matrix_file


def _sample(tmp_path, *extra, name="s.csv"):
    out = tmp_path / name
    code = main(["sample", "--dist", "t-wishart", "--nu", "6", "--n", "10", "--p", "2",
                 "--count", "120", "--out", str(out), "--quiet", *extra])
    return code, out


def test_sample_writes_file(tmp_path):
    code, out = _sample(tmp_path, "--seed", "4")
    assert code == 0
    labels, mats = read_matrix_file(out, 2)
    assert labels is None and mats.shape == (120, 2, 2)


def test_sample_summary_reports_missing_mean(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["sample", "--dist", "t-wishart", "--nu", "1.5", "--n", "10", "--p", "2",
                 "--count", "20", "--seed", "1", "--out", str(out)])
    assert code == 0
    assert "nonexistent (t-: requires nu>2 for mean)" in capsys.readouterr().out


def test_env_seed_and_override(tmp_path, monkeypatch):
    monkeypatch.setenv("ELLWISHART_SEED", "77")
    _, a = _sample(tmp_path, name="a.csv")
    _, b = _sample(tmp_path, "--seed", "77", name="b.csv")
    _, c = _sample(tmp_path, "--seed", "78", name="c.csv")
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()


def test_sigma_file(tmp_path):
    sig = tmp_path / "sigma.csv"
    write_matrix_file(sig, np.array([[2.0, 0.3], [0.3, 1.0]]))
    code, _ = _sample(tmp_path, "--seed", "1", "--sigma", str(sig))
    assert code == 0


def test_moments_json(tmp_path):
    out = tmp_path / "m.json"
    code = main(["moments", "--dist", "kotz-wishart", "--alpha", "1.2", "--beta", "0.9",
                 "--bigr", "0.6", "--n", "8", "--p", "2", "--order", "3", "--mc", "20000",
                 "--seed", "3", "--out", str(out), "--quiet"])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1 and doc["mean"]["exists"]
    assert len(doc["kronecker"]["3"]["value"]) == 64
    assert doc["mc"]["orders"]["2"]["max_abs_z"] < 5


def test_moments_nothing_exists(tmp_path):
    code = main(["moments", "--dist", "t-wishart", "--nu", "1", "--n", "8", "--p", "2",
                 "--order", "1", "--out", str(tmp_path / "m.json"), "--quiet"])
    assert code == 3


@pytest.mark.parametrize("argv,code", [
    (["sample", "--dist", "t-wishart", "--n", "5", "--p", "2", "--out", "x"], 2),
    (["sample", "--dist", "wishart", "--n", "5"], 2),
    (["bogus"], 2),
    (["sample", "--dist", "wishart", "--n", "1", "--p", "3", "--out", "x"], 3),
    (["moments", "--dist", "t-wishart", "--nu", "-1", "--n", "5", "--p", "2"], 3),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_fit_outputs(tmp_path):
    rng = np.random.default_rng(0)
    from ellwishart import EwParams, StudentT, sample
    mats = sample(EwParams(10, np.eye(2), StudentT(6.0)), rng, size=90)
    data = tmp_path / "d.csv"
    write_matrix_file(data, mats, labels=["13"] * 40 + ["rest ing"] * 50)
    out = tmp_path / "fit"
    code = main(["fit", "--data", str(data), "--dim", "2", "--n", "10", "--labeled",
                 "--nu-per-class", "rest ing=8", "--stats", "trace,norm", "--mc-samples", "1000",
                 "--seed", "5", "--out-dir", str(out), "--quiet"])
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["cdf_norm_class_13.csv", "cdf_norm_class_rest_ing.csv",
                     "cdf_trace_class_13.csv", "cdf_trace_class_rest_ing.csv", "report.json"]
    head = (out / "cdf_trace_class_13.csv").read_text().splitlines()
    assert head[0] == "x,data_cdf,wishart_cdf,t_wishart_cdf" and len(head) == 513
    report = json.loads((out / "report.json").read_text())
    assert report["classes"]["13"]["nu"] == 40.0 and report["classes"]["rest ing"]["nu"] == 8.0


def test_fit_bad_records(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("1,0,0,1\n1,0,0,1\n1,3,3,1\n")
    assert main(["fit", "--data", str(data), "--dim", "2", "--n", "5", "--nu", "4",
                 "--out-dir", str(tmp_path / "o")]) == 4
    data.write_text("1,0,0\n")
    assert main(["fit", "--data", str(data), "--dim", "2", "--n", "5", "--nu", "4",
                 "--out-dir", str(tmp_path / "o")]) == 2
    assert main(["fit", "--data", str(data), "--dim", "2", "--n", "5", "--nu", "4",
                 "--stats", "wat", "--out-dir", str(tmp_path / "o")]) == 2


def test_verify_detects_fault(capsys):
    code = main(["verify", "--quick", "--only", "0,2", "--inject-fault", "commutation"])
    assert code == 1
    out = capsys.readouterr().out
    assert out.count("FAIL") == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ellwishart", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("ellwishart ")
