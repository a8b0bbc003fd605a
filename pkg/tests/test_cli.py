import json
import os

import numpy as np
import pytest

from hyperwkg import diagnostics as diag
from hyperwkg.cli import main, parse_ray

SMALL = """[coefficients]
{coeffs}
[grid]
h = 0.125
L = 4.5
[run]
epsilon = {eps}
s_list = 2:3:0.5
sample_order = 2
rays = 0, 0.5
fit_t_min = 2
[outputs]
csv = series.csv
json = report.json
rays = rays.csv
checkpoint = state.bin
"""


def write(tmp_path, coeffs="", eps="1e-3", name="run.cfg"):
    p = tmp_path / name
    p.write_text(SMALL.format(coeffs=coeffs, eps=eps))
    return str(p)


def test_check_all_zero_is_weak_admissible(tmp_path, capsys):
    assert main(["check", write(tmp_path)]) == 0
    assert capsys.readouterr().out.strip().endswith("weak, admissible")


def test_check_strong_system_exit_2(tmp_path, capsys):
    assert main(["check", write(tmp_path, "B2.0 = 1")]) == 2
    out = capsys.readouterr().out
    assert "strong" in out


def test_check_json(tmp_path, capsys):
    A5 = "A5.00 = 1"
    assert main(["check", "--json", write(tmp_path, A5)]) == 2
    rep = json.loads(capsys.readouterr().out)
    assert rep["null_status"]["A5"]["null"] is False


def test_parse_error_exit_1(tmp_path, capsys):
    assert main(["check", write(tmp_path, "P1.00 = x")]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["check", str(tmp_path / "missing.cfg")]) == 1
    assert main(["frobnicate"]) == 1


def test_verify_exit_codes(tmp_path, capsys):
    cfg = write(tmp_path)
    assert main(["verify", cfg, "--suite", "verify_commutators"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and rep["n_checks"] == 5
    assert main(["verify", cfg, "--suite", "verify_box_decomposition", "--corrupt-sign"]) == 4
    assert "identity check failed: verify_box_decomposition" in capsys.readouterr().err
    assert main(["verify", cfg, "--suite", ""]) == 0
    assert "empty" in capsys.readouterr().err
    assert main(["verify", cfg, "--suite", "nonsense"]) == 1


def test_simulate_zero_data(tmp_path):
    cfg = write(tmp_path, "K2 = 1", eps="0")
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "ok" and rep["bootstrap"]["passed"]
    cols = diag.read_csv((tmp_path / "series.csv").read_text())
    assert not np.any(cols["E_std_u_0"]) and not np.any(cols["E_con"])
    assert rep["monitors"]["hessian"]["C_max"] == 0.0
    assert os.path.exists(tmp_path / "report.timing.json")


def test_simulate_strong_needs_force(tmp_path, capsys):
    cfg = write(tmp_path, "B2.0 = 1")
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == 2
    assert "not admissible" in capsys.readouterr().err
    assert not os.path.exists(tmp_path / "report.json")


def test_simulate_runtime_failure_writes_checkpoint(tmp_path, capsys):
    cfg = write(tmp_path, "P2.00 = 1", eps="0.8")
    assert main(["simulate", cfg, "--force", "--out", str(tmp_path)]) == 3
    assert "hyperbolicity" in capsys.readouterr().err
    assert os.path.exists(tmp_path / "state.bin")
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "failed" and rep["failure"]["cause"] == "HyperbolicityLoss"


def test_fit_on_rays_csv(tmp_path, capsys):
    t = np.geomspace(2, 40, 40)
    rows = ["t,u@0,v@0,du@0,dv@0"] + [f"{x!r},{3 / x!r},{1 / x!r},{1 / x!r},{1 / x!r}" for x in map(float, t)]
    path = tmp_path / "rays.csv"
    path.write_text("\n".join(rows) + "\n")
    assert main(["fit", str(path), "--ray", "r=0"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["exponents"]["b"] == pytest.approx(-1.0, abs=1e-9)
    assert main(["fit", str(path), "--ray", "r=0.8t"]) == 1


def test_parse_ray():
    assert parse_ray("r=0") == 0.0
    assert parse_ray("r = 0.8t") == 0.8
    with pytest.raises(ValueError):
        parse_ray("x=1")
