"""
ReportManager for persisting run reports and tables as flat files.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from selfsim.experiments import RunReport, SweepEntry

logger = logging.getLogger(__name__)

NUMBER_FORMAT = "%.17g"
REQUIRED_FIELDS = ["name", "config", "comparator", "snapshots", "series", "mass_ledger"]


def _format_tau(tau: float) -> str:
    return f"{tau:g}".replace(".", "p")


class ReportManager:
    """Manages report persistence and retrieval in one output directory."""

    def __init__(self, output_dir: Union[str, Path] = "results"):
        """
        Initialize the report manager.

        Args:
            output_dir: Directory to write reports and tables into
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _get_report_path(self, name: str) -> Path:
        """Get the file path for a report."""
        return self.output_dir / f"{name}.json"

    def _get_snapshot_path(self, name: str, tau: float) -> Path:
        return self.output_dir / f"{name}_tau{_format_tau(tau)}.csv"

    def write_table(self, filename: str, header: Sequence[str],
                    columns: Sequence[Sequence[float]]) -> Path:
        """
        Write equal-length numeric columns as CSV with a header row.

        Numbers use 17 significant digits so every value reads back unchanged.

        Raises:
            ValueError: If the columns do not match the header or differ in length
        """
        if len(header) != len(columns):
            raise ValueError(f"{len(header)} header names for {len(columns)} columns")
        table = np.column_stack([np.asarray(c, dtype=float) for c in columns])
        path = self.output_dir / filename
        np.savetxt(path, table, fmt=NUMBER_FORMAT, delimiter=",", header=",".join(header),
                   comments="")
        logger.info("Wrote %s (%d rows)", path, table.shape[0])
        return path

    def _write_json(self, path: Path, data: Dict[str, Any]) -> None:
        with open(path, "w") as f:
            json.dump(data, f, indent=2, allow_nan=False)
            f.write("\n")

    def save_report(self, report: RunReport, include_timing: bool = False,
                    json_output: bool = True, csv_output: bool = True) -> List[Path]:
        """
        Persist a run report.

        Args:
            report: Report to write
            include_timing: Add the wall time to the JSON document
            json_output: Write the JSON report
            csv_output: Write one CSV per snapshot (xi, theta_numeric, theta_analytic)

        Returns:
            Paths written, JSON first
        """
        written = []
        if json_output:
            path = self._get_report_path(report.name)
            self._write_json(path, report.to_dict(include_timing=include_timing))
            logger.info("Wrote report %s", path)
            written.append(path)
        if csv_output:
            for record in report.snapshots:
                path = self._get_snapshot_path(report.name, record.tau)
                written.append(self.write_table(
                    path.name,
                    ["xi", "theta_numeric", "theta_analytic"],
                    [record.xi, record.theta_numeric, record.theta_analytic],
                ))
        return written

    def save_failure(self, name: str, message: str, partial: bool = False) -> Path:
        """Record a failed run so partial outputs are flagged next to the other reports."""
        path = self._get_report_path(name)
        self._write_json(path, {"name": name, "status": "failed", "partial": partial,
                                "error": message})
        logger.warning("Recorded failure of %s in %s", name, path)
        return path

    def save_sweep_summary(self, entries: Sequence[SweepEntry],
                           filename: str = "sweep_summary.csv") -> Path:
        """One row per n, sorted by n; failed entries carry nan."""
        rows = sorted(entries, key=lambda e: e.n)

        def fitted(entry: SweepEntry, attr: str) -> float:
            fit = getattr(entry.report, attr) if entry.report else None
            return fit.exponent if fit is not None else math.nan

        return self.write_table(
            filename,
            ["n", "late_time_l2", "flux_exponent", "corner_exponent"],
            [
                [e.n for e in rows],
                [e.late_time_l2 for e in rows],
                [fitted(e, "flux_fit") for e in rows],
                [fitted(e, "corner_fit") for e in rows],
            ],
        )

    def load_report(self, name: str) -> Dict[str, Any]:
        """
        Load a saved report.

        Args:
            name: Report name

        Returns:
            Report data dictionary

        Raises:
            FileNotFoundError: If the report doesn't exist
            ValueError: If the report file is invalid
        """
        path = self._get_report_path(name)
        if not path.exists():
            raise FileNotFoundError(f"Report {name} not found")
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in report file: {e}")
        if data.get("status") == "failed":
            return data
        for field in REQUIRED_FIELDS:
            if field not in data:
                raise ValueError(f"Invalid report file: missing '{field}' field")
        return data

    def list_reports(self) -> List[Dict[str, Any]]:
        """
        List all reports in the output directory.

        Returns:
            Report summaries sorted by name
        """
        reports = []
        for report_file in self.output_dir.glob("*.json"):
            try:
                with open(report_file, "r") as f:
                    data = json.load(f)
            except json.JSONDecodeError:
                continue
            if not isinstance(data, dict) or "name" not in data:
                continue
            snapshots = data.get("snapshots", [])
            reports.append({
                "name": data["name"],
                "status": data.get("status", "ok"),
                "comparator": data.get("comparator"),
                "snapshot_count": len(snapshots),
                "late_time_l2": snapshots[-1]["error"]["l2_rel"] if snapshots else None,
            })
        reports.sort(key=lambda r: r["name"])
        return reports

    def validate_report(self, data: Dict[str, Any]) -> List[str]:
        """
        Validate report data structure.

        Args:
            data: Report data to validate

        Returns:
            List of validation error messages (empty if valid)
        """
        errors = []
        for field in REQUIRED_FIELDS:
            if field not in data:
                errors.append(f"Missing required field: {field}")
        if data.get("status") == "failed":
            errors.append(f"Run failed: {data.get('error', 'unknown error')}")
        if errors:
            return errors

        snapshots = data["snapshots"]
        if not isinstance(snapshots, list):
            return ["'snapshots' must be a list"]
        taus = [s.get("tau") for s in snapshots if isinstance(s, dict)]
        if len(taus) != len(snapshots):
            errors.append("Every snapshot must be a dictionary")
        requested = data["config"].get("snap_times", [])
        if sorted(taus) != sorted(requested):
            errors.append(f"Snapshots {taus} do not match the requested times {requested}")
        if len(set(taus)) != len(taus):
            errors.append("Snapshot times must appear exactly once")
        for i, snapshot in enumerate(snapshots):
            if not isinstance(snapshot, dict):
                continue
            if "error" not in snapshot or "l2_rel" not in snapshot.get("error", {}):
                errors.append(f"Snapshot {i} missing 'error.l2_rel' field")
        return errors
