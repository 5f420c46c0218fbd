"""Command-line interface, exercised in process plus one real subprocess."""

import json
import subprocess
import sys

import pytest

from nsfd.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_writes_trajectory_csv(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "simulate", "--model", "model1", "--scheme", "nsfd",
        "--h", "0.1", "--x0", "0.5", "--y0", "0.5", "--t-end", "20",
        "--out", str(tmp_path))
    assert code == 0
    path = tmp_path / "model1_nsfd_h0.1.csv"
    assert path.exists()
    assert str(path) in out
    assert "final t=20" in out
    lines = path.read_text().splitlines()
    assert lines[0] == "k,t,x,y"
    assert len(lines) == 202  # header + 201 grid points
    assert lines[1] == "0,0,0.5,0.5"


def test_simulate_accepts_weighted_scheme(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "simulate", "--model", "model2", "--scheme", "ensfd",
        "--weight", "exp:2", "--h", "5", "--x0", "0.4", "--y0", "0.4",
        "--t-end", "100", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "model2_ensfd_h5.csv").exists()


def test_equilibria_reports_model2_payload(capsys):
    code, out, _ = run_cli(capsys, "equilibria", "--model", "model2",
                           "--h", "0.5,2.0")
    assert code == 0
    payload = json.loads(out)
    assert payload["model"] == "model2"
    assert payload["degenerate_families"] == []
    eqs = payload["equilibria"]
    assert [e["family"] for e in eqs] == ["O", "E3", "E1"]
    coex = eqs[1]
    assert coex["point"]["x"] == pytest.approx(0.25, abs=1e-9)
    assert [d["h"] for d in coex["discrete"]] == [0.5, 2.0]
    assert coex["discrete"][0]["verdict"] == "asymptotically_stable"
    assert coex["discrete"][1]["verdict"] == "unstable"
    assert coex["critical_step"]["bound"] == pytest.approx(1.0, abs=1e-9)
    assert coex["critical_step"]["bound_a"] == "unbounded"
    # boundary families carry no step bound
    assert eqs[0]["critical_step"] is None
    assert eqs[2]["critical_step"] is None


def test_equilibria_can_also_write_a_file(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "equilibria", "--model", "model1",
                           "--out", str(tmp_path))
    assert code == 0
    path = tmp_path / "model1_equilibria.json"
    assert path.exists()
    assert json.loads(path.read_text()) == json.loads(out)


def test_custom_parameter_selector_matches_named_model(capsys):
    code_a, out_a, _ = run_cli(capsys, "equilibria", "--model", "model2")
    code_b, out_b, _ = run_cli(capsys, "equilibria", "--model", "rma:2,1,1,0.2")
    assert code_a == code_b == 0
    a, b = json.loads(out_a), json.loads(out_b)
    assert a["equilibria"] == b["equilibria"]


def test_compare_writes_one_row_per_scheme_step_pair(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "compare", "--model", "model1", "--scheme", "nsfd,euler,rk4",
        "--h", "0.1,1", "--x0", "15", "--y0", "0.1", "--t-end", "5",
        "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "model1_compare.csv").read_text().splitlines()
    assert len(lines) == 7
    assert lines[1].startswith("nsfd,")
    assert lines[3].startswith("euler,")
    euler_small = lines[3].split(",")
    assert euler_small[8] == "1"  # positivity lost on the first step


def test_convergence_writes_errors_and_slope(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "convergence", "--model", "model1", "--scheme", "nsfd",
        "--h", "0.1,0.05,0.025,0.0125", "--x0", "0.4", "--y0", "0.4",
        "--t-end", "5", "--out", str(tmp_path))
    assert code == 0
    assert "slope 0.98" in out
    lines = (tmp_path / "model1_nsfd_convergence.csv").read_text().splitlines()
    assert lines[0] == "scheme,h,sup_error,slope,residual"
    assert len(lines) == 5


def test_ghosts_reports_spurious_points_as_json(capsys):
    code, out, _ = run_cli(capsys, "ghosts", "--model", "model1",
                           "--scheme", "rk2", "--h", "0.1")
    assert code == 0
    payload = json.loads(out)
    assert payload["scheme"] == "rk2"
    assert payload["ghost_count"] >= 1
    genuine = [p for p in payload["fixed_points"] if p["genuine"]]
    assert len(genuine) == 2


def test_ghosts_empty_for_positivity_scheme_in_requested_box(capsys):
    code, out, _ = run_cli(capsys, "ghosts", "--model", "model2",
                           "--scheme", "nsfd", "--h", "2", "--box", "10,10")
    assert code == 0
    payload = json.loads(out)
    assert payload["box"] == [10.0, 10.0]
    assert payload["ghost_count"] == 0
    assert len(payload["fixed_points"]) == 3


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--model", "model1", "--scheme", "leapfrog",
              "--h", "0.1", "--x0", "1", "--y0", "1", "--t-end", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["orbit"])
    assert exc.value.code == 2


def test_runtime_errors_exit_1(capsys):
    code, out, err = run_cli(
        capsys, "simulate", "--model", "rma:2,-1,1,0.2", "--scheme", "nsfd",
        "--h", "0.1", "--x0", "1", "--y0", "1", "--t-end", "1")
    assert code == 1
    assert err.startswith("error:")
    code, _, err = run_cli(
        capsys, "simulate", "--model", "model1", "--scheme", "nsfd",
        "--h", "-0.5", "--x0", "1", "--y0", "1", "--t-end", "1")
    assert code == 1
    assert "step size" in err


def test_console_entry_point_runs_in_a_subprocess(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nsfd", "simulate", "--model", "model2",
         "--scheme", "nsfd", "--h", "0.5", "--x0", "0.4", "--y0", "0.4",
         "--t-end", "10", "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert (tmp_path / "model2_nsfd_h0.5.csv").exists()
