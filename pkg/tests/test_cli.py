import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from normlab.cli import main

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"


def run(*args, env=None):
    e = dict(os.environ)
    e.pop("NORMLAB_SEED", None)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "normlab", *args], capture_output=True, text=True,
                          env=e, cwd=ROOT)


def report(capsys, *args):
    code = main([*args, "--output", "-", "--no-timestamp", "--jobs", "1"])
    return code, json.loads(capsys.readouterr().out)


def test_norm_lp():
    r = run("norm", "--space", "lp", "--p", "2", "--fn", "t^(-0.25)")
    assert r.returncode == 0
    assert float(r.stdout) == pytest.approx(1.4142136, abs=1e-7)


def test_norm_lorentz_zygmund(capsys):
    assert main(["norm", "--space", "lorentz-zygmund", "--p", "1", "--alpha", "1", "--fn", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.26, abs=0.01)


def test_norm_infinite():
    r = run("norm", "--space", "lp", "--p", "2", "--fn", "t^(-0.5)")
    assert r.returncode == 2
    assert "norm infinite" in r.stderr


def test_norm_other_spaces(capsys, tmp_path):
    assert main(["norm", "--space", "gls", "--fn", "1", "--psi", '{"kind": "power_root", "m": 1}']) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1, rel=1e-6)
    assert main(["norm", "--space", "gzs", "--fn", "1.5", "--q", '{"points": [[2, 1]]}']) == 0
    capsys.readouterr()
    assert main(["norm", "--space", "weighted", "--fn", "abs(ln(t))", "--S", "abs(ln(t))"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2, abs=1e-4)
    csv = tmp_path / "f.csv"
    csv.write_text("3\n1\n2\n")
    assert main(["norm", "--space", "lp", "--p", "1", "--fn", f"csv:{csv}"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2)
    assert main(["norm", "--space", "lp", "--p", "2", "--fn", 'tail:{"p": 3, "alpha": 0}']) == 0
    assert float(capsys.readouterr().out) == pytest.approx(3 ** 0.5, rel=1e-6)


def test_usage_errors():
    assert run("norm", "--space", "nope", "--fn", "1").returncode == 1
    assert run("norm", "--space", "lp", "--p", "2", "--fn", "t +").returncode == 1
    assert run("verify", "--inequality", "holder", "--config", '{"bogus": 1}').returncode == 1
    assert run("verify", "--inequality", "holder", "--config", "missing.json").returncode == 1
    assert run("norm", "--space", "lp", "--p", "2", "--fn", "1", "--jobs", "0").returncode == 1


def test_verify_embedding_gamma0(capsys):
    code, rep = report(capsys, "verify", "--inequality", "embedding", "--config",
                       str(FIX / "embedding_gamma0.json"))
    assert code == 0
    assert all(r["status"] == "pass" for r in rep["result"]["reports"])


def test_verify_holder_equality(capsys):
    code, rep = report(capsys, "verify", "--inequality", "holder", "--config",
                       str(FIX / "holder_equality.json"))
    r = rep["result"]["reports"][0]
    assert code == 0 and r["status"] == "pass"
    assert abs(r["margin"]) < 1e-8


def test_verify_half_theta_fails():
    r = run("verify", "--inequality", "embedding", "--config", str(FIX / "embedding_half_theta.json"))
    assert r.returncode == 3


@pytest.mark.parametrize("name, inequality", [
    ("tail", "tail"), ("coincidence", "coincidence"), ("gls_weighted", "gls-weighted"),
    ("gzs_tail", "gzs-tail"), ("dilation", "dilation"), ("monotonicity", "monotonicity"),
    ("lower", "lower"), ("inverse", "inverse")])
def test_verify_fixtures_pass(capsys, name, inequality):
    code, rep = report(capsys, "verify", "--inequality", inequality, "--config", str(FIX / f"{name}.json"))
    assert code == 0, rep["result"]


def test_verify_infinite_exit_code():
    cfg = json.dumps({"fn": "t^(-0.5)", "S": "1", "p": 2})
    assert run("verify", "--inequality", "holder", "--config", cfg).returncode == 2


def test_report_envelope(capsys):
    code, rep = report(capsys, "constants", "--what", "theta", "--grid", "r=1;p=2;gamma=0,1,2")
    assert code == 0
    for key in ("schema_version", "version", "command", "config", "config_hash", "tolerances", "seed"):
        assert key in rep
    assert "timestamp" not in rep
    values = [row["value"] for row in rep["result"]["rows"]]
    assert values == pytest.approx([1, 1.4142136, 4.8989795], abs=1e-7)
    assert all("abs_error_estimate" in row for row in rep["result"]["rows"])


def test_timestamp_present_by_default(capsys):
    main(["constants", "--what", "theta", "--grid", "r=1;p=2;gamma=1", "--output", "-"])
    assert "timestamp" in json.loads(capsys.readouterr().out)


def test_constants_csv():
    r = run("constants", "--what", "theta", "--grid", "r=1;p=2;gamma=0,1,2", "--format", "csv",
            "--output", "-")
    lines = r.stdout.strip().splitlines()
    assert lines[0] == "r,p,gamma,value,abs_error_estimate"
    assert len(lines) == 4


def test_constants_j_and_zeta(capsys):
    code, rep = report(capsys, "constants", "--what", "j", "--grid", "alpha=0;p=2;s=1")
    assert code == 0 and rep["result"]["rows"][0]["value"] == pytest.approx(2, abs=1e-6)
    code, rep = report(capsys, "constants", "--what", "zeta", "--grid", "psi_m=1;nu_m=1")
    assert code == 0 and rep["result"]["rows"][0]["value"] == pytest.approx(4, rel=1e-6)


def test_sharpness(capsys):
    code, rep = report(capsys, "sharpness", "--r", "1", "--p", "2", "--gamma", "1")
    assert code == 0
    assert abs(rep["result"]["gap"]) <= 1e-4


def test_mc_domination(capsys):
    code, rep = report(capsys, "mc", "--experiment", "domination", "--config", str(FIX / "extremal_2_0.json"))
    assert code == 0
    assert rep["result"]["violations"] == 0
    assert rep["seed"] == 20240601


def test_mc_blowup_and_extremal(capsys):
    code, rep = report(capsys, "mc", "--experiment", "blowup", "--config", str(FIX / "blowup_2_0.json"))
    assert code == 0 and rep["result"]["passed"]
    code, _ = report(capsys, "mc", "--experiment", "extremal", "--config", str(FIX / "extremal_2_0.json"))
    assert code == 0


def test_seed_precedence(tmp_path):
    cfg = json.dumps({"p": 2, "alpha": 0, "n": 1000})
    args = ("mc", "--experiment", "domination", "--config", cfg, "--output", "-", "--no-timestamp")
    assert json.loads(run(*args).stdout)["seed"] == 0
    assert json.loads(run(*args, env={"NORMLAB_SEED": "17"}).stdout)["seed"] == 17
    assert json.loads(run(*args, "--seed", "5", env={"NORMLAB_SEED": "17"}).stdout)["seed"] == 5
    assert run(*args, env={"NORMLAB_SEED": "x"}).returncode == 1


def test_byte_identical_reports(tmp_path):
    args = ("verify", "--inequality", "embedding", "--config", str(FIX / "embedding_gamma0.json"),
            "--no-timestamp")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(*args, "--output", str(a), "--jobs", "1").returncode == 0
    assert run(*args, "--output", str(b), "--jobs", "3").returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_hash_tracks_config(capsys):
    _, r1 = report(capsys, "constants", "--what", "theta", "--grid", "r=1;p=2;gamma=1")
    _, r2 = report(capsys, "constants", "--what", "theta", "--grid", "r=1;p=3;gamma=1")
    assert r1["config_hash"] != r2["config_hash"]
