import json
import subprocess
import sys

import numpy as np
import pytest

from skewcs import io as sio
from skewcs.cli import EXIT_CERT, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main, read_kv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exclusion_example(capsys):
    code, out, _ = run(capsys, "exclusion", "--n1", "3", "--n2", "0", "--beta1", "3", "--beta2", "6")
    assert code == EXIT_OK
    d = json.loads(out)
    assert d["on_curve"] is True and d["nearest_k"] == 2 and d["predicted_S"] == 2
    assert d["exclusion_value"] == "1/2"


def test_exclusion_rejects_small_rate(capsys):
    code, _, err = run(capsys, "exclusion", "--n1", "1", "--n2", "1", "--beta1", "1", "--beta2", "3")
    assert code == EXIT_CONFIG and "config error" in err


def test_missing_arguments_are_config_errors(capsys):
    assert run(capsys, "solve-radial", "--n1", "0")[0] == EXIT_CONFIG
    assert run(capsys, "exclusion")[0] == EXIT_CONFIG
    assert run(capsys, "no-such-mode")[0] == EXIT_CONFIG
    assert run(capsys, "solve-radial", "--n1", "0", "--n2", "0", "--beta1", "3", "--beta2", "3",
               "--tol", "-1")[0] == EXIT_CONFIG


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "skewcs.cli", "exclusion", "--n1", "2", "--n2", "2",
                        "--beta1", "4", "--beta2", "4"], capture_output=True, text=True, cwd=tmp_path)
    assert r.returncode == 0
    assert json.loads(r.stdout)["on_boundary"] is True
    r = subprocess.run([sys.executable, "-m", "skewcs.cli", "verify"], capture_output=True, text=True)
    assert r.returncode == 2


@pytest.fixture(scope="module")
def radial_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("radial")
    code = main(["solve-radial", "--n1", "0", "--n2", "0", "--beta1", "3", "--beta2", "3", "--tol", "1e-8",
                 "--out", str(d / "sol.json")])
    return code, d


def test_solve_radial_example(radial_run):
    code, d = radial_run
    assert code == EXIT_OK
    rep = json.loads((d / "sol_report.json").read_text())
    assert rep["passed"] is True
    for k in ("flux1", "flux2", "mass1", "mass2", "joint"):
        assert rep[f"rel_err_{k}"] < 1e-6
    sol = json.loads((d / "sol.json").read_text())
    assert sol["schema"] == "skewcs.radial-solution/1"
    assert sol["config"]["beta1"] == 3.0 and sol["version"]


def test_radial_round_trip_is_bit_exact(radial_run, tmp_path):
    _, d = radial_run
    sol = sio.load_radial(d / "sol.json")
    sio.save_radial(sol, tmp_path / "again.json", json.loads((d / "sol.json").read_text())["config"])
    assert (tmp_path / "again.json").read_bytes() == (d / "sol.json").read_bytes()
    back = sio.load_radial(tmp_path / "again.json")
    assert np.array_equal(back.samples, sol.samples)
    assert back.quad == sol.quad and back.outcome == sol.outcome


def test_verify_accepts_stored_solution(radial_run, capsys):
    _, d = radial_run
    code, out, _ = run(capsys, "verify", str(d / "sol.json"))
    assert code == EXIT_OK
    v = json.loads(out)
    assert v["passed"] and v["recompute_drift"] < 1e-6


@pytest.mark.parametrize("recompute", [True, False])
def test_verify_rejects_corrupted_flux(radial_run, tmp_path, capsys, recompute):
    _, d = radial_run
    data = json.loads((d / "sol.json").read_text())
    data["quad"]["flux1"] *= 1.01
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    flags = [] if recompute else ["--no-recompute"]
    code, out, _ = run(capsys, "verify", str(bad), *flags)
    assert code == EXIT_CERT
    assert json.loads(out)["passed"] is False


def test_verify_unknown_schema(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"schema": "other"}))
    assert run(capsys, "verify", str(p))[0] == EXIT_CONFIG


def test_reproducible_artifacts(tmp_path, monkeypatch, capsys):
    argv = ["solve-radial", "--n1", "1", "--n2", "2", "--beta1", "4", "--beta2", "6", "--out", "s.json"]
    blobs = []
    for name in ("a", "b"):
        (tmp_path / name).mkdir()
        monkeypatch.chdir(tmp_path / name)
        assert main(argv) == EXIT_OK
        blobs.append(((tmp_path / name / "s.json").read_bytes(),
                      (tmp_path / name / "s_report.json").read_bytes(),
                      capsys.readouterr().out))
    assert blobs[0] == blobs[1]


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# exclusion parameters\nn1 = 3\nn2 = 0  # trailing comment\nbeta1 = 4\nbeta2 = 6\n")
    assert read_kv(cfg) == {"n1": "3", "n2": "0", "beta1": "4", "beta2": "6"}
    code, out, _ = run(capsys, "exclusion", "--config", str(cfg))
    assert code == EXIT_OK and json.loads(out)["on_curve"] is False
    code, out, _ = run(capsys, "exclusion", "--config", str(cfg), "--beta1", "3")
    assert code == EXIT_OK and json.loads(out)["on_curve"] is True


def test_config_file_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n1 3\n")
    assert run(capsys, "exclusion", "--config", str(cfg))[0] == EXIT_CONFIG
    cfg.write_text("colour = blue\n")
    assert run(capsys, "exclusion", "--config", str(cfg))[0] == EXIT_CONFIG
    assert run(capsys, "exclusion", "--config", str(tmp_path / "missing.cfg"))[0] == EXIT_CONFIG


def test_shoot_modes(capsys, tmp_path):
    code, out, _ = run(capsys, "shoot", "--n1", "0", "--n2", "0", "--a1", "-1", "--a2", "-1",
                       "--out", str(tmp_path / "t.json"))
    assert code == EXIT_OK and json.loads(out)["outcome"] == "non_topological"
    code, out, _ = run(capsys, "shoot", "--n1", "0", "--n2", "0", "--a1", "5", "--a2", "5")
    assert code == EXIT_SOLVER and json.loads(out)["outcome"] == "numerical_failure"


def test_solve_radial_failure_exit(capsys):
    code, out, _ = run(capsys, "solve-radial", "--n1", "1", "--n2", "2", "--beta1", "2", "--beta2", "2")
    assert code == EXIT_SOLVER
    assert json.loads(out)["schema"] == "skewcs.failure/1"


def test_scan_writes_atlas(tmp_path, capsys):
    out_csv = tmp_path / "atlas.csv"
    code, out, _ = run(capsys, "scan", "--n1", "0", "--n2", "0", "--a1-range=-1,0", "--a2-range=-1,0",
                       "--steps", "2", "--out", str(out_csv))
    assert code == EXIT_OK
    assert json.loads(out)["cells"] == 4
    assert out_csv.read_text().splitlines()[0] == "a1,a2,outcome,beta1,beta2"
    assert run(capsys, "scan", "--n1", "0", "--n2", "0", "--a1-range=-1,0", "--a2-range=-1,0",
               "--steps", "1")[0] == EXIT_CONFIG


def test_continue_and_verify_planar(tmp_path, capsys):
    out = tmp_path / "path"
    code, stdout, _ = run(capsys, "continue", "--n1", "1", "--n2", "1", "--points1", "0.5,0",
                          "--points2=-0.5,0", "--beta1", "4", "--beta2", "4", "--radius", "30", "--h", "0.5",
                          "--steps", "2", "--cert-tol", "0.5", "--out-dir", str(out))
    assert code == EXIT_OK, stdout
    rows = (out / "path.csv").read_text().splitlines()
    assert rows[0].startswith("step,eps") and len(rows) == 4
    summary = json.loads((out / "path.json").read_text())
    assert [s["eps"] for s in summary["steps"]] == [0.0, 0.5, 1.0]
    assert all("grid_estimate" in s for s in summary["steps"])
    code, stdout, _ = run(capsys, "verify", str(out / "step002.json"), "--cert-tol", "0.5")
    assert code == EXIT_OK and json.loads(stdout)["passed"]
    # a perturbed field no longer solves the discrete equations
    sol = sio.load_planar(out / "step002.json")
    from dataclasses import replace

    sio.save_planar(replace(sol, v1=sol.v1 + 1e-3), tmp_path / "bad.json")
    assert run(capsys, "verify", str(tmp_path / "bad.json"), "--cert-tol", "0.5")[0] == EXIT_CERT
