import json
import subprocess
import sys

import pytest

from conftest import two_point_closed_form
from mfot.cli import main

MU = '{"points": [0.0, 1.0], "weights": [0.5, 0.5]}'
ANTI = '{"points": [0.0, 1.0], "weights": [[0.0, 0.5], [0.5, 0.0]]}'
GAUSS = "gaussian:s=0.7071067811865476"


@pytest.fixture(autouse=True)
def _cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--mu", MU, "--cost", GAUSS, "--n", "3", "--json", "--mps", "p.mps")
    assert code == 0
    rep = json.loads(out)
    assert rep["F_N"] == pytest.approx(two_point_closed_form(3), abs=1e-10)
    assert json.loads((tmp_path / "report.json").read_text())["F_N"] == rep["F_N"]
    assert (tmp_path / "p.mps").read_text().rstrip().endswith("ENDATA")


def test_solve_from_file(capsys, tmp_path):
    (tmp_path / "mu.json").write_text(MU)
    code, out, _ = run(capsys, "solve", "--mu", "mu.json", "--cost", GAUSS, "--n", "4", "--formulation", "reduced")
    assert code == 0 and "F_N:" in out


def test_repcheck_infeasible(capsys, tmp_path):
    code, out, _ = run(capsys, "repcheck", "--mu2", ANTI, "--n", "3")
    assert code == 0
    assert out.splitlines()[0] == "infeasible"
    assert "certificate verified: True" in out
    rep = json.loads((tmp_path / "repcheck.json").read_text())
    assert rep["certificate_verified"] and max(abs(v) for v in rep["certificate"]) == pytest.approx(1.0)


def test_repcheck_feasible(capsys):
    code, out, _ = run(capsys, "repcheck", "--mu2", ANTI, "--n", "2")
    assert code == 0 and out.strip() == "feasible"


def test_lift_product(capsys, tmp_path):
    code, out, _ = run(capsys, "lift", "--product-of", MU, "--n", "3", "--json", "--out", "lift.json")
    assert code == 0
    rep = json.loads(out)
    assert rep["tv"] == pytest.approx(1 / 3) and rep["passed"]
    assert json.loads((tmp_path / "lift.json").read_text())["lift"]["kind"] == "mixture"


def test_fourier(capsys, tmp_path):
    mix = {"grid": {"torus": {"M": 16, "L": 8.0}}, "kind": "mixture",
           "components": [[1.0] + [0.0] * 15, [0.0, 0.0, 1.0] + [0.0] * 13], "weights": [0.5, 0.5]}
    (tmp_path / "nu.json").write_text(json.dumps(mix))
    code, out, _ = run(capsys, "fourier", "--mixture", "nu.json", "--cost", GAUSS, "--spectrum-csv", "s.csv",
                       "--json")
    assert code == 0
    rep = json.loads(out)
    assert rep["identity_error"] <= 1e-12
    assert rep["variance_term"] == pytest.approx(0.3160602794, abs=1e-9)
    assert (tmp_path / "s.csv").read_text().startswith("n0,k0,real,imag")


CONFIG = """
[run]
seed = 3
jobs = 1

[[experiment]]
kind = "convergence"
n_range = "2..6"
"""


def test_experiment_outputs_and_determinism(capsys, tmp_path):
    (tmp_path / "c.toml").write_text(CONFIG)
    code, out, _ = run(capsys, "experiment", "c.toml", "--output-dir", "a")
    assert code == 0 and "ok" in out
    d = tmp_path / "a" / "convergence"
    names = {p.name for p in d.iterdir()}
    assert {"result.json", "manifest.json", "timings.json"} <= names
    assert any(n.endswith(".csv") for n in names) and any(n.endswith(".svg") for n in names)
    run(capsys, "experiment", "c.toml", "--output-dir", "b", "--jobs", "2")
    assert (d / "manifest.json").read_bytes() == (tmp_path / "b" / "convergence" / "manifest.json").read_bytes()


def test_experiment_failed_check_exits_1(capsys, tmp_path, monkeypatch):
    import mfot.cli as cli
    from mfot.experiments import run_experiment

    def broken(*a, **kw):
        res = run_experiment(*a, **kw)
        res.checks["monotone"] = False
        return res

    monkeypatch.setattr(cli, "run_experiment", broken)
    (tmp_path / "c.toml").write_text(CONFIG)
    code, out, _ = run(capsys, "experiment", "c.toml")
    assert code == 1 and "FAILED monotone" in out


def test_unknown_flag_is_usage_error(capsys):
    assert run(capsys, "experiment", "c.toml", "--frobnicate")[0] == 2


def test_validate(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == 0
    assert all(line.startswith("PASS") for line in out.splitlines())


@pytest.mark.parametrize("argv, code", [
    ([], 2),
    (["solve", "--mu", MU, "--cost", "nope", "--n", "3"], 1),
    (["solve", "--mu", MU, "--cost", GAUSS, "--n", "1"], 1),
    (["solve", "--mu", "missing.json", "--cost", GAUSS, "--n", "3"], 2),
    (["solve", "--mu", MU, "--cost", GAUSS, "--n", "40", "--budget", "10"], 1),
    (["lift", "--product-of", MU], 2),
    (["experiment", "missing.toml"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_json_errors(capsys, tmp_path):
    (tmp_path / "bad.toml").write_text("[run]\nseeds = 1\n")
    code, _, err = run(capsys, "experiment", "bad.toml", "--json-errors")
    assert code == 2
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["exit_code"] == 2 and payload["error"] == "config" and "seeds" in payload["message"]


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "mfot", "lift", "--product-of", MU, "--n", "2"],
                       capture_output=True, text=True, cwd=tmp_path)
    assert p.returncode == 0 and "tv:" in p.stdout
