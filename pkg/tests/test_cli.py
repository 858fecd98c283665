import json

import numpy as np
import pytest

from multinoise import NumericalError
from multinoise.cli import main
from multinoise.problems import inverted_pendulum, problem_to_dict


def write_problem(tmp_path, doc, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def stable_doc():
    return {
        "A": [[0.5, 0.1], [0.0, 0.6]],
        "B": [[0.0], [1.0]],
        "A_dirs": [[[0.0, 1.0], [0.0, 0.0]]],
        "alpha": [0.05],
        "theta": [1.0],
        "Q": [[1.0, 0.0], [0.0, 1.0]],
        "R": [[1.0]],
    }


def pendulum_doc():
    return problem_to_dict(inverted_pendulum())


def run_json(capsys, argv):
    code = main(argv + ["--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_check_mss_stable(tmp_path, capsys):
    path = write_problem(tmp_path, stable_doc())
    code, out = run_json(capsys, ["check-mss", path])
    assert code == 0
    assert out["mss"] is True
    assert out["moment_radius"] < 1


def test_check_mss_unstable_exit_one(tmp_path, capsys):
    path = write_problem(tmp_path, pendulum_doc())
    code, out = run_json(capsys, ["check-mss", path])
    assert code == 1
    assert out["mss"] is False
    assert out["moment_radius"] > 1


def test_solve_gare_reports_solution(tmp_path, capsys):
    path = write_problem(tmp_path, stable_doc())
    code, out = run_json(capsys, ["solve-gare", path])
    assert code == 0
    assert out["converged"] is True
    assert out["closed_loop_mss"] is True
    assert np.asarray(out["P"]).shape == (2, 2)


def test_solve_gare_diverges_exit_one(tmp_path, capsys):
    doc = pendulum_doc()
    doc["alpha"] = [150.0]
    path = write_problem(tmp_path, doc)
    code, out = run_json(capsys, ["solve-gare", path])
    assert code == 1
    assert out["converged"] is False


@pytest.mark.parametrize(
    "method", ["shared-uni", "shared-bi", "aux", "cons-lin", "cons-simple"]
)
def test_margins_methods(tmp_path, capsys, method):
    path = write_problem(tmp_path, stable_doc())
    code, out = run_json(capsys, ["margins", path, "--method", method])
    assert code == 0
    assert out["method"] == method
    assert out["y_star"] > 0
    assert len(out["eta"]) == 1


def test_margins_scalar_method(tmp_path, capsys):
    doc = {"A": [[0.5]], "B": [[1.0]], "A_dirs": [[[1.0]]],
           "alpha": [0.25], "theta": [1.0]}
    path = write_problem(tmp_path, doc)
    code, out = run_json(capsys, ["margins", path, "--method", "scalar"])
    assert code == 0
    assert out["bidirectional"] is True
    assert out["eta"][0] == pytest.approx(np.sqrt(0.5) - 0.5, abs=1e-9)


def test_margins_conservative_without_theta(tmp_path, capsys):
    doc = stable_doc()
    del doc["theta"]
    path = write_problem(tmp_path, doc)
    code, out = run_json(capsys, ["margins", path, "--method", "cons-lin"])
    assert code == 0
    assert out["y_star"] > 0
    code = main(["margins", path, "--method", "shared-uni"])
    assert code == 2  # proportional bisection needs the weights


def test_margins_not_mss_exit_one(tmp_path, capsys):
    path = write_problem(tmp_path, pendulum_doc())
    code, out = run_json(capsys, ["margins", path, "--method", "shared-uni"])
    assert code == 1
    assert out["status"] == "infeasible"


def test_margins_rejects_input_uncertainty(tmp_path, capsys):
    doc = stable_doc()
    doc["B_dirs"] = [[[0.0], [1.0]]]
    doc["beta"] = [0.1]
    doc["phi"] = [1.0]
    path = write_problem(tmp_path, doc)
    code = main(["margins", path, "--method", "shared-uni"])
    assert code == 2


def test_design_ce_matches_benchmark(tmp_path, capsys):
    path = write_problem(tmp_path, pendulum_doc())
    code, out = run_json(capsys, ["design", path, "--algo", "ce"])
    assert code == 0
    np.testing.assert_allclose(out["K"], [[-9.14, -4.15]], rtol=0.01)
    assert out["certificate"] is None


def test_design_then_verify_grid_round_trip(tmp_path, capsys):
    path = write_problem(tmp_path, pendulum_doc())
    code, out = run_json(capsys, ["design", path, "--algo", "1"])
    assert code == 0
    cert_path = tmp_path / "design1.json"
    cert_path.write_text(json.dumps(out))
    code, report = run_json(
        capsys, ["verify-grid", path, "--cert", str(cert_path),
                 "--samples", "2000"],
    )
    assert code == 0
    assert report["all_stable"] is True
    assert report["worst_rho"] == pytest.approx(0.841, abs=0.02)


def test_verify_grid_unsound_certificate_exit_one(tmp_path, capsys):
    # a hand-written box far beyond any certified margin must be caught
    doc = stable_doc()
    doc["A_dirs"] = [[[0.0, 0.0], [1.0, 0.0]]]  # destabilizing direction
    path = write_problem(tmp_path, doc)
    bogus = {
        "method": "shared-uni", "y_star": 50.0, "eta": [50.0], "psi": [],
        "bidirectional": False, "cap_hit": False, "P": None,
        "q_matrix": None, "zeta": None,
    }
    cert_path = tmp_path / "bogus.json"
    cert_path.write_text(json.dumps(bogus))
    code, report = run_json(
        capsys, ["verify-grid", path, "--cert", str(cert_path),
                 "--samples", "200"],
    )
    assert code == 1
    assert report["all_stable"] is False


def test_design_algo2_emits_bidirectional_box(tmp_path, capsys):
    path = write_problem(tmp_path, pendulum_doc())
    code, out = run_json(capsys, ["design", path, "--algo", "2"])
    assert code == 0
    assert out["certificate"]["bidirectional"] is True
    assert out["certificate"]["eta"][0] == pytest.approx(3.970, rel=0.05)


def test_design_unstabilizable_exit_one(tmp_path, capsys):
    doc = {
        "A": [[2.0, 0.0], [0.0, 0.5]],
        "B": [[0.0], [1.0]],
        "Q": [[1.0, 0.0], [0.0, 1.0]],
        "R": [[1.0]],
    }
    path = write_problem(tmp_path, doc)
    code, out = run_json(capsys, ["design", path, "--algo", "ce"])
    assert code == 1
    assert out["status"] == "infeasible"


def test_simulate_deterministic(tmp_path, capsys):
    path = write_problem(tmp_path, stable_doc())
    argv = ["simulate", path, "--trials", "200", "--seed", "42",
            "--horizon", "10"]
    code1, out1 = run_json(capsys, argv)
    code2, out2 = run_json(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2
    assert len(out1["exact_norm"]) == 11


def test_parse_error_exit_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{ not json")
    assert main(["check-mss", str(path)]) == 2
    assert main(["check-mss", str(tmp_path / "missing.json")]) == 2
    bad = write_problem(tmp_path, {"A": [[1.0]]}, "nob.json")
    assert main(["check-mss", bad]) == 2


def test_numerical_failure_exit_three(tmp_path, capsys, monkeypatch):
    path = write_problem(tmp_path, stable_doc())
    import multinoise.cli as cli_mod

    def boom(args):
        raise NumericalError("synthetic failure")

    monkeypatch.setitem(cli_mod.__dict__, "cmd_check_mss", boom)
    parser = cli_mod.build_parser()
    args = parser.parse_args(["check-mss", path])
    args.func = boom
    monkeypatch.setattr(cli_mod, "build_parser", lambda: parser)
    monkeypatch.setattr(parser, "parse_args", lambda argv=None: args)
    assert cli_mod.main(["check-mss", path]) == 3


def test_reproduce_pendulum_table(capsys):
    code = main(["reproduce-pendulum", "--samples", "2000"])
    out = capsys.readouterr().out
    assert code == 0
    assert "algorithm-1" in out
    assert "max rho over box" in out


def test_reproduce_pendulum_json(capsys):
    code, out = run_json(capsys, ["reproduce-pendulum", "--samples", "2000"])
    assert code == 0
    assert out["open_loop"]["rho_closed_loop"] == pytest.approx(1.223, abs=0.01)
    assert out["algorithm_1"]["eta_1"] == pytest.approx(6.997, rel=0.05)
    assert out["algorithm_2"]["eta_1"] == pytest.approx(3.970, rel=0.05)


def test_table_format_six_significant_digits(tmp_path, capsys):
    path = write_problem(tmp_path, stable_doc())
    code = main(["check-mss", path])
    out = capsys.readouterr().out
    assert code == 0
    # six significant digits in table mode
    radius_line = [l for l in out.splitlines() if "moment_radius" in l][0]
    value = radius_line.split(":")[1].strip()
    assert len(value.replace(".", "").replace("-", "").lstrip("0")) <= 6


def test_solver_overrides(tmp_path, capsys):
    path = write_problem(tmp_path, stable_doc())
    code, out = run_json(
        capsys, ["solve-gare", path, "--tol", "1e-4", "--max-iter", "50"]
    )
    assert code == 0
    assert out["iterations"] <= 50
