"""
Tests for the command-line front end.
"""
import json

import numpy as np
import pytest
from click.testing import CliRunner

from selfsim.cli import main

SHORT = ["--N", "300", "--snap-times", "0,0.5,1,1.5"]


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, out, *args, **kwargs):
    return runner.invoke(main, ["--quiet", "--out", str(out), *args], **kwargs)


def test_analytic_writes_requested_samples(runner, tmp_path):
    result = _invoke(runner, tmp_path, "analytic", "--solution", "neumann", "--n", "2.3333333",
                     "--gamma0", "1", "--tau", "1", "--xi-max", "10", "--samples", "200")
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "analytic_neumann.csv").read_text().splitlines()
    assert lines[0] == "xi,theta"
    assert len(lines) == 201


def test_analytic_reduction_is_byte_identical(runner, tmp_path):
    common = ["--n", "1", "--phi0", "1", "--tau", "2"]
    assert _invoke(runner, tmp_path, "analytic", "--solution", "superposed", "--gamma0", "0",
                   *common).exit_code == 0
    assert _invoke(runner, tmp_path, "analytic", "--solution", "dirichlet", *common).exit_code == 0
    superposed = (tmp_path / "analytic_superposed.csv").read_bytes()
    assert superposed == (tmp_path / "analytic_dirichlet.csv").read_bytes()


def test_analytic_domain_error(runner, tmp_path):
    result = _invoke(runner, tmp_path, "analytic", "--solution", "neumann", "--n", "1",
                     "--gamma0", "1", "--tau", "0", "--tau-shift", "0")
    assert result.exit_code == 1
    assert "Domain error" in result.output


def test_reproduce_writes_report_and_snapshots(runner, tmp_path):
    result = _invoke(runner, tmp_path, "reproduce", "--panel", "right", *SHORT)
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "fig1_right.json").read_text())
    assert [s["tau"] for s in report["snapshots"]] == [0.0, 0.5, 1.0, 1.5]
    assert report["comparator_exact"] is False
    for tau in ("0", "0p5", "1", "1p5"):
        assert (tmp_path / f"fig1_right_tau{tau}.csv").exists()
    assert result.output.count("l2_rel=") == 4


def test_reproduce_is_byte_identical(runner, tmp_path):
    for out in ("a", "b"):
        assert _invoke(runner, tmp_path / out, "reproduce", "--panel", "left", "--format", "json",
                       *SHORT).exit_code == 0
    first = (tmp_path / "a" / "fig1_left.json").read_bytes()
    assert first == (tmp_path / "b" / "fig1_left.json").read_bytes()
    assert not list((tmp_path / "a").glob("*.csv"))


def test_reproduce_override_matching_default_is_a_no_op(runner, tmp_path):
    args = ["reproduce", "--panel", "right", "--format", "json", *SHORT]
    assert _invoke(runner, tmp_path / "a", *args).exit_code == 0
    assert _invoke(runner, tmp_path / "b", *args, "--gamma0", "0.1", "--phi0", "1.0").exit_code == 0
    first = (tmp_path / "a" / "fig1_right.json").read_bytes()
    assert first == (tmp_path / "b" / "fig1_right.json").read_bytes()


def test_reproduce_timestamps_flag(runner, tmp_path):
    result = _invoke(runner, tmp_path, "reproduce", "--panel", "left", "--format", "json",
                     "--timestamps", *SHORT)
    assert result.exit_code == 0, result.output
    assert "wall_time" in json.loads((tmp_path / "fig1_left.json").read_text())


@pytest.mark.parametrize("override", [["--N", "8"], ["--L", "5"], ["--snap-times", "3,1"]])
def test_reproduce_rejects_invalid_overrides(runner, tmp_path, override):
    result = _invoke(runner, tmp_path, "reproduce", "--panel", "left", *override)
    assert result.exit_code == 2


def test_reproduce_reports_step_limit(runner, tmp_path):
    result = _invoke(runner, tmp_path, "reproduce", "--panel", "left", "--max-steps", "5", *SHORT)
    assert result.exit_code == 1
    failure = json.loads((tmp_path / "fig1_left.json").read_text())
    assert failure["status"] == "failed" and failure["partial"] is True


def test_list_shows_saved_and_failed_reports(runner, tmp_path):
    assert _invoke(runner, tmp_path, "list").output.strip() == "No reports"
    assert _invoke(runner, tmp_path, "reproduce", "--panel", "left", *SHORT).exit_code == 0
    _invoke(runner, tmp_path, "reproduce", "--panel", "right", "--max-steps", "5", *SHORT)

    result = _invoke(runner, tmp_path, "list")
    assert result.exit_code == 0, result.output
    left, right = result.output.strip().splitlines()
    assert left.startswith("fig1_left\tok\tsnapshots=4\tlate_time_l2=")
    assert right == "fig1_right\tfailed\tsnapshots=0\tlate_time_l2=-"


def test_output_directory_from_environment(runner, tmp_path):
    out = tmp_path / "from_env"
    result = runner.invoke(main, ["--quiet", "analytic", "--solution", "linear", "--n", "0",
                                  "--gamma0", "1", "--tau", "1"], env={"SELFSIM_OUT": str(out)})
    assert result.exit_code == 0, result.output
    assert (out / "analytic_linear.csv").exists()


def test_sweep_summary_rows_sorted(runner, tmp_path):
    result = _invoke(runner, tmp_path, "sweep", "--n", "1,0.5", *SHORT)
    assert result.exit_code == 0, result.output
    table = np.loadtxt(tmp_path / "sweep_summary.csv", delimiter=",", skiprows=1, ndmin=2)
    assert table[:, 0].tolist() == [0.5, 1.0]
    assert (tmp_path / "sweep_n0.5.json").exists()


def test_sweep_failure_sets_exit_code(runner, tmp_path):
    result = _invoke(runner, tmp_path, "sweep", "--n", "1", "--tau-shift", "0", *SHORT)
    assert result.exit_code == 1
    assert (tmp_path / "sweep_summary.csv").exists()


def test_residual_linear_case_vanishes(runner, tmp_path):
    result = _invoke(runner, tmp_path, "residual", "--n", "0", "--gamma0", "0.1", "--phi0", "1")
    assert result.exit_code == 0, result.output
    table = np.loadtxt(tmp_path / "residual.csv", delimiter=",", skiprows=1)
    assert np.all(np.abs(table[:, 2]) < 1e-12)
    assert np.all(table[:, 3] == 0.0)


def test_residual_without_gamma_vanishes(runner, tmp_path):
    result = _invoke(runner, tmp_path, "residual", "--n", "1", "--gamma0", "0", "--phi0", "1")
    assert result.exit_code == 0, result.output
    table = np.loadtxt(tmp_path / "residual.csv", delimiter=",", skiprows=1)
    assert np.all(np.abs(table[:, 2]) < 1e-12)
    assert np.all(table[:, 3] == 0.0)


def test_residual_matches_defect(runner, tmp_path):
    result = _invoke(runner, tmp_path, "residual", "--n", "1", "--gamma0", "1", "--phi0", "1")
    assert result.exit_code == 0, result.output
    header = (tmp_path / "residual.csv").read_text().splitlines()[0]
    assert header == "tau,xi,expression,defect,pde_residual"
    table = np.loadtxt(tmp_path / "residual.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(table[:, 2], table[:, 3], rtol=1e-9)
    assert np.all(table[:, 2] < 0.0)
