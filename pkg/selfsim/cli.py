"""
Command-line front end: analytic profiles, the two reference scenarios, the
nonlinearity sweep and residual tables.
"""
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from selfsim import diagnostics, experiments, kernel
from selfsim.diagnostics import DiagnosticsError
from selfsim.experiments import ScenarioConfig, ScenarioError
from selfsim.kernel import DomainError, Solution, SuperposedParams
from selfsim.report_manager import ReportManager

logger = logging.getLogger(__name__)

COARSE_CELLS = 64
SOLUTION_CHOICE = click.Choice([s.value for s in Solution])


class CliConfig(BaseModel):
    """Validated invocation of a scenario-running subcommand."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    subcommand: Literal["analytic", "reproduce", "sweep", "residual"]
    out_dir: Path
    output_format: Literal["json", "csv", "both"] = "both"
    timestamps: bool = False
    overrides: Dict[str, Any] = {}

    @property
    def json_output(self) -> bool:
        return self.output_format in ("json", "both")

    @property
    def csv_output(self) -> bool:
        return self.output_format in ("csv", "both")

    def scenario(self, builder: Callable[..., ScenarioConfig]) -> ScenarioConfig:
        """
        Build a scenario with the overrides applied.

        Raises:
            click.UsageError: If the overrides violate the scenario constraints
        """
        cells = self.overrides.get("cells")
        if cells is not None and cells < COARSE_CELLS:
            logger.warning("N=%d is a coarse grid; the front margin check may fail", cells)
        try:
            return builder(**self.overrides)
        except (ValidationError, DomainError) as e:
            raise click.UsageError(f"Invalid scenario: {e}")


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def _parse_floats(ctx: click.Context, param: click.Parameter,
                  value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _overrides(**values: Any) -> Dict[str, Any]:
    return {k: v for k, v in values.items() if v is not None}


def _manager(ctx: click.Context) -> ReportManager:
    try:
        return ReportManager(ctx.obj["out_dir"])
    except OSError as e:
        raise click.ClickException(f"Cannot use output directory {ctx.obj['out_dir']}: {e}")


def _check_written(manager: ReportManager, name: str, json_output: bool) -> None:
    if not json_output:
        return
    errors = manager.validate_report(manager.load_report(name))
    if errors:
        raise click.ClickException(f"Report {name} failed validation: {'; '.join(errors)}")


@click.group()
@click.option("--out", "out_dir", envvar="SELFSIM_OUT", default="results", show_default=True,
              type=click.Path(file_okay=False), help="Output directory (env: SELFSIM_OUT)")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging")
@click.option("--quiet", is_flag=True, help="Only warnings and errors")
@click.pass_context
def main(ctx: click.Context, out_dir: str, verbose: bool, quiet: bool):
    """Porous medium equation lab: self-similar solutions versus a conservative solver."""
    _configure_logging(verbose, quiet)
    ctx.ensure_object(dict)
    ctx.obj["out_dir"] = Path(out_dir)


@main.command()
@click.option("--solution", "which", type=SOLUTION_CHOICE, required=True)
@click.option("--n", type=float, required=True, help="Nonlinearity parameter")
@click.option("--gamma0", type=float, default=0.0, show_default=True)
@click.option("--phi0", type=float, default=0.0, show_default=True)
@click.option("--tau", type=float, required=True)
@click.option("--tau-shift", type=float, default=0.0, show_default=True)
@click.option("--xi-max", type=float, default=10.0, show_default=True)
@click.option("--samples", type=click.IntRange(min=2), default=200, show_default=True)
@click.option("--output", default=None, help="CSV file name (default analytic_<solution>.csv)")
@click.pass_context
def analytic(ctx: click.Context, which: str, n: float, gamma0: float, phi0: float, tau: float,
             tau_shift: float, xi_max: float, samples: int, output: Optional[str]):
    """Tabulate a closed-form solution as (xi, theta) CSV."""
    try:
        params = SuperposedParams.create(n, gamma0, phi0, tau_shift)
        xi = np.linspace(0.0, xi_max, samples)
        theta = kernel.evaluate(which, params, xi, tau)
    except DomainError as e:
        raise click.ClickException(f"Domain error: {e}")
    path = _manager(ctx).write_table(output or f"analytic_{which}.csv", ["xi", "theta"],
                                     [xi, theta])
    click.echo(str(path))


def _scenario_options(func):
    for option in reversed([
        click.option("--n", type=float, default=None),
        click.option("--gamma0", type=float, default=None),
        click.option("--phi0", type=float, default=None),
        click.option("--tau-shift", type=float, default=None),
        click.option("--L", "--length", "length", type=float, default=None),
        click.option("--N", "--cells", "cells", type=int, default=None),
        click.option("--snap-times", callback=_parse_floats, default=None,
                     help="Comma-separated snapshot times"),
        click.option("--safety", type=float, default=None),
        click.option("--max-steps", type=int, default=None),
    ]):
        func = option(func)
    return func


@main.command()
@click.option("--panel", type=click.Choice(["left", "right"]), required=True)
@_scenario_options
@click.option("--format", "output_format", type=click.Choice(["json", "csv", "both"]),
              default="both", show_default=True)
@click.option("--timestamps", is_flag=True, help="Record wall time in the report")
@click.pass_context
def reproduce(ctx: click.Context, panel: str, output_format: str, timestamps: bool,
              **scenario: Any):
    """Run one panel of the reference figure and write its report."""
    config = CliConfig(subcommand="reproduce", out_dir=ctx.obj["out_dir"],
                       output_format=output_format, timestamps=timestamps,
                       overrides=_overrides(**scenario))
    builder = experiments.fig1_left_config if panel == "left" else experiments.fig1_right_config
    scenario_config = config.scenario(builder)
    manager = _manager(ctx)

    try:
        report = experiments.run_scenario(scenario_config)
    except ScenarioError as e:
        manager.save_failure(scenario_config.name, str(e), partial=e.partial)
        raise click.ClickException(str(e))

    try:
        manager.save_report(report, include_timing=config.timestamps,
                            json_output=config.json_output, csv_output=config.csv_output)
        _check_written(manager, report.name, config.json_output)
    except (OSError, ValueError) as e:
        raise click.ClickException(f"Could not write report {report.name}: {e}")

    for record in report.snapshots:
        click.echo(f"tau={record.tau:g} l2_rel={record.error.l2_rel:.6e}")


@main.command()
@click.option("--n", "ns", callback=_parse_floats, default="0.25,0.5,1,2.3333333333333335",
              show_default=True, help="Comma-separated nonlinearity values")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--gamma0", type=float, default=None)
@click.option("--phi0", type=float, default=None)
@click.option("--tau-shift", type=float, default=None)
@click.option("--L", "--length", "length", type=float, default=None)
@click.option("--N", "--cells", "cells", type=int, default=None)
@click.option("--snap-times", callback=_parse_floats, default=None)
@click.option("--format", "output_format", type=click.Choice(["json", "csv", "both"]),
              default="json", show_default=True, help="Per-n report outputs")
@click.option("--timestamps", is_flag=True)
@click.pass_context
def sweep(ctx: click.Context, ns: List[float], workers: int, output_format: str,
          timestamps: bool, **scenario: Any):
    """Repeat the right panel for several n and summarise the late-time errors."""
    if not ns:
        raise click.UsageError("--n needs at least one value")
    if any(n < 0 for n in ns):
        raise click.UsageError("--n values must be >= 0")
    config = CliConfig(subcommand="sweep", out_dir=ctx.obj["out_dir"],
                       output_format=output_format, timestamps=timestamps,
                       overrides=_overrides(**scenario))
    manager = _manager(ctx)

    entries = experiments.n_sweep(ns, workers=workers, **config.overrides)
    failed = []
    for entry in entries:
        if entry.ok:
            manager.save_report(entry.report, include_timing=config.timestamps,
                                json_output=config.json_output, csv_output=config.csv_output)
            _check_written(manager, entry.report.name, config.json_output)
        else:
            manager.save_failure(f"sweep_n{entry.n:g}", entry.error)
            failed.append(entry)
    path = manager.save_sweep_summary(entries)
    click.echo(str(path))
    for entry in entries:
        click.echo(f"n={entry.n:g} late_time_l2={entry.late_time_l2:.6e}")
    if failed:
        raise click.ClickException(
            f"{len(failed)} of {len(entries)} sweep runs failed: "
            + ", ".join(f"n={e.n:g}" for e in failed)
        )


@main.command()
@click.option("--n", type=float, required=True)
@click.option("--gamma0", type=float, default=1.0, show_default=True)
@click.option("--phi0", type=float, default=1.0, show_default=True)
@click.option("--tau-shift", type=float, default=0.0, show_default=True)
@click.option("--taus", callback=_parse_floats, default="1,2,4,8", show_default=True)
@click.option("--xi-max", type=float, default=2.0, show_default=True)
@click.option("--samples", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--stencil-h", type=float, default=1e-2, show_default=True)
@click.option("--stencil-dt", type=float, default=1e-3, show_default=True)
@click.option("--output", default="residual.csv", show_default=True)
@click.pass_context
def residual(ctx: click.Context, n: float, gamma0: float, phi0: float, tau_shift: float,
             taus: List[float], xi_max: float, samples: int, stencil_h: float,
             stencil_dt: float, output: str):
    """Tabulate the superposition residual over a (xi, tau) lattice."""
    rows: Dict[str, List[float]] = {k: [] for k in
                                    ("tau", "xi", "expression", "defect", "pde_residual")}
    try:
        params = SuperposedParams.create(n, gamma0, phi0, tau_shift)
        for tau in taus:
            t = tau + tau_shift
            gamma = kernel.gamma_of_tau(params, tau)
            phi = kernel.phi_of_tau(params, tau)
            for xi in np.linspace(xi_max / samples, xi_max, samples):
                try:
                    pde = diagnostics.extrapolated_residual(params, xi, tau, stencil_h, stencil_dt)
                except DiagnosticsError:
                    pde = float("nan")
                rows["tau"].append(tau)
                rows["xi"].append(xi)
                rows["expression"].append(
                    diagnostics.residual_expression(params.ctx, gamma0, phi0, xi, t))
                rows["defect"].append(kernel.superposition_defect(params.ctx, gamma, phi, xi))
                rows["pde_residual"].append(pde)
    except DomainError as e:
        raise click.ClickException(f"Domain error: {e}")
    path = _manager(ctx).write_table(output, list(rows), list(rows.values()))
    click.echo(str(path))


@main.command("list")
@click.pass_context
def list_reports(ctx: click.Context):
    """Summarise the reports in the output directory."""
    reports = _manager(ctx).list_reports()
    if not reports:
        click.echo("No reports")
        return
    for report in reports:
        late = report["late_time_l2"]
        late_text = "-" if late is None else f"{late:.6e}"
        click.echo(f"{report['name']}\t{report['status']}\t"
                   f"snapshots={report['snapshot_count']}\tlate_time_l2={late_text}")


if __name__ == "__main__":
    main()
