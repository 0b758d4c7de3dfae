"""
Tests for report persistence.
"""
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfsim.experiments import SweepEntry
from selfsim.report_manager import ReportManager

from .conftest import SHORT_SNAPS


@pytest.fixture
def manager(tmp_path):
    return ReportManager(tmp_path / "results")


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1,
                max_size=20))
@settings(max_examples=50)
def test_table_values_read_back_unchanged(tmp_path_factory, values):
    """
    **Property: 17 significant digits preserve every double**
    """
    manager = ReportManager(tmp_path_factory.mktemp("tables"))
    path = manager.write_table("values.csv", ["index", "value"],
                               [np.arange(len(values)), values])
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    assert table[:, 1].tolist() == values


def test_table_layout(manager):
    path = manager.write_table("t.csv", ["xi", "theta"], [[0.0, 0.5], [1.0, 0.25]])
    lines = path.read_text().splitlines()
    assert lines == ["xi,theta", "0,1", "0.5,0.25"]
    with pytest.raises(ValueError):
        manager.write_table("bad.csv", ["xi"], [[0.0], [1.0]])


def test_save_and_load_report(manager, short_right_report):
    written = manager.save_report(short_right_report)
    assert written[0].name == "short_right.json"
    assert len(written) == 1 + len(SHORT_SNAPS)
    data = manager.load_report("short_right")
    assert manager.validate_report(data) == []
    assert data["config"]["snap_times"] == SHORT_SNAPS
    assert "wall_time" not in data

    snapshot_csv = manager.output_dir / "short_right_tau0p5.csv"
    header = snapshot_csv.read_text().splitlines()[0]
    assert header == "xi,theta_numeric,theta_analytic"
    table = np.loadtxt(snapshot_csv, delimiter=",", skiprows=1)
    assert table.shape == (short_right_report.config.cells + 1, 3)
    assert table[:, 1].tolist() == short_right_report.snapshots[1].theta_numeric.tolist()


def test_saved_reports_are_byte_identical(tmp_path, short_right_report):
    first = ReportManager(tmp_path / "a").save_report(short_right_report)
    second = ReportManager(tmp_path / "b").save_report(short_right_report)
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_timing_is_opt_in(manager, short_right_report):
    manager.save_report(short_right_report, include_timing=True, csv_output=False)
    assert "wall_time" in manager.load_report("short_right")


def test_load_errors(manager):
    with pytest.raises(FileNotFoundError):
        manager.load_report("missing")
    (manager.output_dir / "broken.json").write_text("{not json")
    with pytest.raises(ValueError):
        manager.load_report("broken")
    (manager.output_dir / "partial.json").write_text(json.dumps({"name": "partial"}))
    with pytest.raises(ValueError):
        manager.load_report("partial")


def test_validate_report_detects_missing_snapshot(manager, short_right_report):
    data = short_right_report.to_dict()
    data["snapshots"] = data["snapshots"][:-1]
    errors = manager.validate_report(data)
    assert any("do not match" in e for e in errors)
    assert manager.validate_report({"name": "x"})


def test_failures_are_flagged(manager):
    manager.save_failure("fig1_left", "Reached max_steps", partial=True)
    data = manager.load_report("fig1_left")
    assert data["status"] == "failed"
    assert data["partial"] is True
    assert manager.validate_report(data)


def test_list_reports(manager, short_right_report, short_left_report):
    manager.save_report(short_right_report, csv_output=False)
    manager.save_report(short_left_report, csv_output=False)
    manager.save_failure("zz_failed", "boom")
    (manager.output_dir / "noise.json").write_text("[1, 2]")
    summaries = manager.list_reports()
    assert [s["name"] for s in summaries] == ["short_left", "short_right", "zz_failed"]
    assert summaries[0]["snapshot_count"] == len(SHORT_SNAPS)
    assert summaries[2]["status"] == "failed"


def test_sweep_summary_sorted_by_n(manager, short_right_report):
    entries = [SweepEntry(n=7.0 / 3.0, report=short_right_report),
               SweepEntry(n=0.5, error="failed")]
    path = manager.save_sweep_summary(entries)
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    assert table[:, 0].tolist() == [0.5, 7.0 / 3.0]
    assert np.isnan(table[0, 1])
    assert table[1, 1] == short_right_report.late_time_error.l2_rel
