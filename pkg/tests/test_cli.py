"""test_cli.py - Integration tests for the command-line driver.

Runs each subcommand on small inputs and checks exit codes, the files
written into the output directory, configuration layering and
thread-independent outputs.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import csv
import json
from unittest.mock import patch

import pytest

from src import main, write_grid
from src.cli import EXIT_ACCEPTANCE, EXIT_INVALID, EXIT_OK, build_parser, resolve_config
from src.config import SCHEMA_VERSION


def read_json(path):
    with open(path) as file:
        return json.load(file)


def read_csv(path):
    with open(path, newline="") as file:
        return list(csv.reader(file))


def test_rate(tmp_path):
    """Test the rate table and its outputs.

    Args:
        tmp_path: Pytest temporary directory.
    """
    status = main(["rate", "--out", str(tmp_path), "--format", "both", "--set", "rate.xi_sweep=0,2e-12"])
    payload = read_json(tmp_path / "rate.json")

    assert status == EXIT_OK
    assert payload["schema_version"] == SCHEMA_VERSION
    assert payload["command"] == "rate"
    assert "threads" not in payload["config"]
    assert payload["tau_red"] == pytest.approx(1.35e-23, rel=0.01)
    assert payload["xi0"] == pytest.approx(2e-12)
    assert read_csv(tmp_path / "rate_breakdown.csv")[0] == ["quantity", "value", "unit"]
    assert read_csv(tmp_path / "rate_sweep.csv")[0] == ["xi", "inv_tau_red"]


def test_reduce(tmp_path, capsys):
    """Test a small ensemble run and its CSV outputs.

    Args:
        tmp_path: Pytest temporary directory.
        capsys: Pytest output capture.
    """
    status = main(["reduce", "--out", str(tmp_path), "--seed", "3", "--format", "both",
                   "--set", "reduce.n_trajectories=500", "--set", "reduce.p0=0.2,0.3,0.5"])
    payload = read_json(tmp_path / "reduce.json")

    assert status == EXIT_OK
    assert "Done!" in capsys.readouterr().out
    assert payload["report"]["n_trajectories"] == 500
    assert sum(payload["report"]["counts"]) == 500
    assert read_csv(tmp_path / "reduce_exits.csv")[0] == ["exit_time", "channel"]
    assert len(read_csv(tmp_path / "reduce_exits.csv")) == 501
    assert read_csv(tmp_path / "reduce_mean.csv")[0] == ["t", "p0", "p1", "p2"]
    assert read_csv(tmp_path / "reduce_survival.csv")[0] == ["t", "survival"]


def test_reduce_output_does_not_depend_on_threads(tmp_path):
    """Test byte-identical JSON for one and several worker threads.

    Args:
        tmp_path: Pytest temporary directory.
    """
    args = ["reduce", "--out", str(tmp_path), "--seed", "11", "--set", "reduce.n_trajectories=4200"]
    assert main(args + ["--threads", "1"]) == EXIT_OK
    single = (tmp_path / "reduce.json").read_bytes()
    assert main(args + ["--threads", "3"]) == EXIT_OK

    assert (tmp_path / "reduce.json").read_bytes() == single


def test_reduce_unresolved_bound(tmp_path):
    """Test exit code 3 when too many trajectories are unresolved.

    Args:
        tmp_path: Pytest temporary directory.
    """
    status = main(["reduce", "--out", str(tmp_path), "--set", "reduce.n_trajectories=100",
                   "--set", "reduce.max_time=0.5"])

    assert status == EXIT_ACCEPTANCE
    assert read_json(tmp_path / "reduce.json")["report"]["unresolved"] > 1


@pytest.mark.parametrize("args", [
    ["reduce", "--set", "reduce.p0=0.5,0.6"],
    ["reduce", "--set", "sampler.n=3"],
    ["reduce", "--threads", "0"],
    ["reduce", "--set", "reduce.dt=0.5"],
    ["epr", "--set", "epr.a=1", "--set", "epr.b=1"],
    ["factorize", "--set", "factorize.rank=40"],
])
def test_invalid_input(tmp_path, args):
    """Test exit code 2 on invalid input.

    Args:
        tmp_path: Pytest temporary directory.
        args: Command line without the output directory.
    """
    assert main(args + ["--out", str(tmp_path)]) == EXIT_INVALID


def test_missing_config_file(tmp_path):
    """Test exit code 2 for an unreadable config file.

    Args:
        tmp_path: Pytest temporary directory.
    """
    assert main(["rate", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path)]) == EXIT_INVALID


def test_config_layering(tmp_path):
    """Test that flags beat --set, which beats the config file.

    Args:
        tmp_path: Pytest temporary directory.
    """
    path = tmp_path / "run.cfg"
    path.write_text("reduce.n_trajectories = 10\nreduce.tau_red = 2\n")
    args = build_parser().parse_args(["--seed", "4", "reduce", "--config", str(path),
                                      "--set", "reduce.n_trajectories=20", "--threads", "2"])
    config = resolve_config(args)

    assert config.seed == 4
    assert config.threads == 2
    assert config.reduce.n_trajectories == 20
    assert config.reduce.tau_red == 2.0


def test_fp(tmp_path):
    """Test a short Fokker-Planck solve.

    Args:
        tmp_path: Pytest temporary directory.
    """
    status = main(["fp", "--out", str(tmp_path), "--format", "both", "--set", "fp.cells=50",
                   "--set", "fp.t_end=2", "--set", "fp.dt=0.01"])
    payload = read_json(tmp_path / "fp.json")

    assert status == EXIT_OK
    assert payload["solution"]["final_absorbed_0"] == pytest.approx(payload["solution"]["final_absorbed_1"])
    assert read_csv(tmp_path / "fp_history.csv")[0] == ["t", "survival", "absorbed_0", "absorbed_1"]
    assert read_csv(tmp_path / "fp_density.csv")[0] == ["p", "q"]


def test_fp_compare(tmp_path):
    """Test the Monte Carlo comparison of the fp command.

    Args:
        tmp_path: Pytest temporary directory.
    """
    status = main(["fp", "--out", str(tmp_path), "--set", "fp.cells=100", "--set", "fp.t_end=10",
                   "--set", "fp.dt=0.01", "--set", "fp.p_start=0.3", "--set", "fp.compare=true",
                   "--set", "fp.compare_trajectories=3000", "--set", "fp.max_deviation=0.05"])

    assert status == EXIT_OK
    assert read_json(tmp_path / "fp.json")["comparison"]["sup_norm"] < 0.05


def test_epr_singlet(tmp_path):
    """Test the EPR sweep of the singlet.

    Args:
        tmp_path: Pytest temporary directory.
    """
    status = main(["epr", "--out", str(tmp_path), "--format", "both", "--set", "epr.n_runs=200",
                   "--set", "epr.thetas=0,pi/2", "--set", "epr.compare_schedule=sequential"])
    payload = read_json(tmp_path / "epr.json")
    table = read_csv(tmp_path / "epr_correlations.csv")

    assert status == EXIT_OK
    assert [point["correlation"] for point in payload["points"]] == [-1.0, -1.0]
    assert table[0] == ["theta", "n++", "n+-", "n-+", "n--", "correlation", "correlation_exact", "fit_p",
                        "schedule_p"]
    assert len(table) == 3
    assert len(read_csv(tmp_path / "epr_runs.csv")) == 401


def test_factorize_example(tmp_path):
    """Test the two-variable factorization of a built-in function.

    Args:
        tmp_path: Pytest temporary directory.
    """
    status = main(["factorize", "--out", str(tmp_path), "--format", "both", "--set", "factorize.example=two-term",
                   "--set", "factorize.shape=12,10", "--set", "factorize.rank=2"])
    payload = read_json(tmp_path / "factorize.json")

    assert status == EXIT_OK
    assert payload["factorization"]["rank"] == 2
    assert payload["factorization"]["residual_direct"] == pytest.approx(0.0, abs=1e-12)
    rows = read_csv(tmp_path / "factorize_factors.csv")
    assert rows[0] == ["term", "axis", "x", "real", "imag"]
    assert len(rows) == 1 + 2 * (12 + 10)


def test_factorize_three_variables(tmp_path):
    """Test the ordering comparison of a three-variable function.

    Args:
        tmp_path: Pytest temporary directory.
    """
    status = main(["factorize", "--out", str(tmp_path), "--set", "factorize.shape=4,5,6"])
    payload = read_json(tmp_path / "factorize.json")

    assert status == EXIT_OK
    assert len(payload["residuals"]) == 3
    assert payload["best_axis"] in (0, 1, 2)


def test_factorize_grid_file(tmp_path, product_psi):
    """Test factorization of a function read from a grid file.

    Args:
        tmp_path: Pytest temporary directory.
        product_psi: Separable function fixture.
    """
    path = tmp_path / "psi.txt"
    assert write_grid(path, product_psi)
    status = main(["factorize", "--out", str(tmp_path), "--set", f"factorize.input={path}"])

    assert status == EXIT_OK
    assert read_json(tmp_path / "factorize.json")["factorization"]["residual_direct"] < 1e-12


def test_selfcheck_failure_exit_code(tmp_path):
    """Test that a failed acceptance check gives exit code 3 and still writes JSON.

    Args:
        tmp_path: Pytest temporary directory.
    """
    report = {"scale": "quick", "sizes": {}, "passed": False,
              "checks": [{"name": "born_rule", "passed": False, "details": {}}]}
    with patch("src.cli.run_selfcheck", return_value=report):
        status = main(["selfcheck", "--out", str(tmp_path), "--format", "csv"])

    assert status == EXIT_ACCEPTANCE
    assert read_json(tmp_path / "selfcheck.json")["report"]["passed"] is False
