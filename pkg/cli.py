"""
Command line for the color production line simulator.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Nothing is written to disk when a command exits with 2.
"""
import json
import logging
import sys
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from app.core.config import settings
from app.core.exceptions import (
    BudgetExhaustedError, HeadcountViolationError, InfeasibleBoundsError,
    InfeasibleTotalError, LineSimError, MissingStationError, ModelError,
    SchemaError, SchemaMismatchError, UnknownTargetError,
)
from app.core.logging import configure_logging
from app.schemas.line import LineModel
from app.schemas.scenario import CalibrationTarget, FreeParameter, Objective, RunSpec
from app.services import report_writer
from app.services.analysis_service import compare_scenarios, detect_bottleneck, profile_around
from app.services.line_service import build_paper_line, load_config, serialize
from app.services.optimizer_service import optimizer_service
from app.services.replication_service import replication_service
from app.services.report_writer import ReportWriter
from app.services.scenario_service import load_scenario_file, scenario_service

app = typer.Typer(help="Simulate a color production line, find its bottleneck and compare scenarios.",
                  no_args_is_help=True)
console = Console()
logger = logging.getLogger("lineflow.cli")

CONFIG_ERRORS = (
    ModelError, SchemaMismatchError, InfeasibleTotalError, InfeasibleBoundsError,
    UnknownTargetError, HeadcountViolationError,
)


class OutputFormat(str, Enum):
    CSV = "csv"
    TABLE = "table"


@app.callback()
def callback(
    log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="Logging level (logs go to stderr)"),
) -> None:
    configure_logging(log_level, settings.DEBUG)


def _fail(code: int, message: str) -> None:
    typer.echo(f"error: {message}", err=True)
    raise typer.Exit(code)


def _guard(action: Callable[[], None]) -> None:
    """Run a command body and map failures to exit codes."""
    try:
        action()
    except CONFIG_ERRORS as e:
        _fail(2, str(e))
    except ValidationError as e:
        _fail(2, "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()))
    except LineSimError as e:
        _fail(1, str(e))


def _run_spec(config: Optional[Path], scenario: Optional[Path], reps: int, horizon: float,
              seed: int, out_dir: Optional[Path], workers: int) -> RunSpec:
    return RunSpec(
        config=str(config) if config else None,
        scenario=str(scenario) if scenario else None,
        replications=reps,
        horizon=horizon,
        seed=seed,
        out_dir=str(out_dir) if out_dir else None,
        workers=workers,
    )


def _load_model(spec: RunSpec) -> LineModel:
    model = load_config(spec.config) if spec.config else build_paper_line()
    if spec.scenario:
        model = scenario_service.apply_interventions(model, load_scenario_file(spec.scenario))
    return model


def _emit(fmt: OutputFormat, tables: list, frames: list) -> None:
    if fmt == OutputFormat.TABLE:
        report_writer.print_tables(tables, console)
    else:
        report_writer.frames_to_stdout(frames, console)


ConfigOpt = typer.Option(None, "--config", help="Line config JSON (default: built-in color line)")
ScenarioOpt = typer.Option(None, "--scenario", help="Intervention list JSON applied in order")
RepsOpt = typer.Option(settings.DEFAULT_REPLICATIONS, "--reps", help="Replications")
HorizonOpt = typer.Option(settings.DEFAULT_HORIZON_HOURS, "--horizon-hours", help="Horizon of each replication, hours")
SeedOpt = typer.Option(settings.DEFAULT_SEED, "--seed", help="Seed of every random stream")
OutDirOpt = typer.Option(Path("results"), "--out-dir", help="Directory for report files")
FormatOpt = typer.Option(OutputFormat.TABLE, "--format", help="Standard output format")
WorkersOpt = typer.Option(settings.WORKERS, "--workers", help="Worker processes for replications")


@app.command()
def simulate(
    config: Optional[Path] = ConfigOpt,
    scenario: Optional[Path] = ScenarioOpt,
    reps: int = RepsOpt,
    horizon_hours: float = HorizonOpt,
    seed: int = SeedOpt,
    out_dir: Path = OutDirOpt,
    fmt: OutputFormat = FormatOpt,
    workers: int = WorkersOpt,
) -> None:
    """Run replications and write summary.csv, queues.csv and pools.csv."""
    def action():
        spec = _run_spec(config, scenario, reps, horizon_hours, seed, out_dir, workers)
        model = _load_model(spec)
        summary = replication_service.simulate(model, spec.replications, spec.seed, spec.horizon, spec.workers)
        ReportWriter(spec.out_dir).write_summary(summary)
        _emit(fmt, [report_writer.summary_table(summary)], [report_writer.summary_frame(summary)])

    _guard(action)


@app.command()
def compare(
    config: Optional[Path] = ConfigOpt,
    scenario: Optional[Path] = ScenarioOpt,
    alt_config: Optional[Path] = typer.Option(None, "--alt-config", help="Config of the alternative line"),
    reps: int = RepsOpt,
    horizon_hours: float = HorizonOpt,
    seed: int = SeedOpt,
    out_dir: Path = OutDirOpt,
    fmt: OutputFormat = FormatOpt,
    workers: int = WorkersOpt,
) -> None:
    """Run the base line and an alternative with common random numbers and diff them."""
    def action():
        if scenario is None and alt_config is None:
            raise SchemaError(["compare needs --scenario or --alt-config"])
        spec = _run_spec(config, None, reps, horizon_hours, seed, out_dir, workers)
        base_model = _load_model(spec)
        alt_model = load_config(alt_config) if alt_config else base_model
        if scenario:
            alt_model = scenario_service.apply_interventions(alt_model, load_scenario_file(scenario))

        base = replication_service.simulate(base_model, spec.replications, spec.seed, spec.horizon, spec.workers)
        alt = replication_service.simulate(alt_model, spec.replications, spec.seed, spec.horizon, spec.workers)
        diff = compare_scenarios(base, alt)

        writer = ReportWriter(spec.out_dir)
        writer.write_summary(base, prefix="current_")
        writer.write_summary(alt, prefix="developed_")
        writer.write_diff(diff)
        _emit(fmt, [report_writer.diff_table(diff)], [report_writer.diff_frame(diff)])

    _guard(action)


@app.command()
def bottleneck(
    config: Optional[Path] = ConfigOpt,
    scenario: Optional[Path] = ScenarioOpt,
    reps: int = RepsOpt,
    horizon_hours: float = HorizonOpt,
    seed: int = SeedOpt,
    out_dir: Path = OutDirOpt,
    fmt: OutputFormat = FormatOpt,
    workers: int = WorkersOpt,
) -> None:
    """Rank stations by machine utilization, then queue wait."""
    def action():
        spec = _run_spec(config, scenario, reps, horizon_hours, seed, out_dir, workers)
        model = _load_model(spec)
        summary = replication_service.simulate(model, spec.replications, spec.seed, spec.horizon, spec.workers)
        ranking = detect_bottleneck(summary, model)
        try:
            profile = profile_around(summary, model, ranking.bottleneck)
        except MissingStationError:
            profile = None
        ReportWriter(spec.out_dir).write_bottleneck(ranking)
        _emit(fmt, [report_writer.bottleneck_table(ranking, profile)], [report_writer.bottleneck_frame(ranking)])

    _guard(action)


@app.command()
def optimize(
    total: int = typer.Option(..., "--total", help="Operators to allocate"),
    objective: Objective = typer.Option(Objective.MIN_COST_PER_UNIT, "--objective"),
    pool: Optional[List[str]] = typer.Option(None, "--pool", help="Operator pool to vary (repeatable; default all)"),
    config: Optional[Path] = ConfigOpt,
    scenario: Optional[Path] = ScenarioOpt,
    reps: int = RepsOpt,
    horizon_hours: float = HorizonOpt,
    seed: int = SeedOpt,
    out_dir: Path = OutDirOpt,
    fmt: OutputFormat = FormatOpt,
    workers: int = WorkersOpt,
) -> None:
    """Search operator counts per pool; writes allocation.json and allocation_trace.csv."""
    def action():
        spec = _run_spec(config, scenario, reps, horizon_hours, seed, out_dir, workers)
        model = _load_model(spec)
        if spec.horizon != model.horizon_hours:
            model = model.model_copy(update={"horizon_hours": spec.horizon})
        result = optimizer_service.optimize_operators(
            model, total, objective, spec.replications, spec.seed, pools=pool or None, workers=spec.workers,
        )
        writer = ReportWriter(spec.out_dir)
        writer.write_text(json.dumps({
            "objective": result.objective.value,
            "mode": result.mode,
            "total": result.total,
            "allocation": result.allocation,
            "outputs": result.summary.metrics["average_outputs"].mean,
            "cost_per_unit": result.summary.metrics["cost_per_unit"].mean,
        }, indent=2) + "\n", "allocation.json")
        writer.write(report_writer.allocation_trace_frame(result), "allocation_trace.csv")
        _emit(fmt, [report_writer.allocation_table(result)], [report_writer.allocation_trace_frame(result)])

    _guard(action)


def _read_targets(path: Path):
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise SchemaError([f"cannot read {path}: {e.strerror or e}"])
    except json.JSONDecodeError as e:
        raise SchemaError([f"{path}: line {e.lineno}, column {e.colno}: {e.msg}"])
    targets = [CalibrationTarget.model_validate(t) for t in data.get("targets", [])]
    free = [FreeParameter.model_validate(p) for p in data.get("free", [])]
    if not targets:
        raise SchemaError([f"{path}: no targets"])
    return targets, free


@app.command()
def calibrate(
    targets: Path = typer.Option(..., "--targets", help="JSON with 'targets' and 'free' parameter bounds"),
    budget: int = typer.Option(300, "--budget", help="Maximum objective evaluations"),
    config: Optional[Path] = ConfigOpt,
    scenario: Optional[Path] = ScenarioOpt,
    reps: int = typer.Option(settings.CALIBRATION_REPLICATIONS, "--reps", help="Replications per evaluation"),
    horizon_hours: float = HorizonOpt,
    seed: int = SeedOpt,
    out_dir: Path = OutDirOpt,
    fmt: OutputFormat = FormatOpt,
    workers: int = WorkersOpt,
) -> None:
    """Fit free parameters to report targets; writes calibration.json and calibration_trace.csv."""
    def action():
        spec = _run_spec(config, scenario, reps, horizon_hours, seed, out_dir, workers)
        target_list, free = _read_targets(targets)
        model = _load_model(spec)
        if spec.horizon != model.horizon_hours:
            model = model.model_copy(update={"horizon_hours": spec.horizon})
        writer = ReportWriter(spec.out_dir)
        try:
            result = optimizer_service.calibrate(model, target_list, free, budget, spec.seed, spec.replications)
        except BudgetExhaustedError as e:
            if e.best is not None:
                _write_calibration(writer, e.best, fmt)
            raise
        _write_calibration(writer, result, fmt)

    _guard(action)


def _write_calibration(writer: ReportWriter, result, fmt: OutputFormat) -> None:
    document = {
        **result.parameter_block(),
        "residuals": [r.model_dump() for r in result.residuals],
        "objective": result.objective,
        "evaluations": result.evaluations,
    }
    writer.write_text(json.dumps(document, indent=2) + "\n", "calibration.json")
    writer.write(report_writer.calibration_trace_frame(result), "calibration_trace.csv")
    if fmt == OutputFormat.TABLE:
        report_writer.print_tables([report_writer.residual_table(result)], console)
    else:
        console.print(json.dumps(document, indent=2), markup=False, highlight=False, soft_wrap=True)


@app.command("export-fixture")
def export_fixture(
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Write paper_line.json here instead of stdout"),
) -> None:
    """Print or write the built-in color line config."""
    text = serialize(build_paper_line())
    if out_dir is None:
        sys.stdout.write(text)
        return
    ReportWriter(out_dir).write_text(text, "paper_line.json")


if __name__ == "__main__":
    app()
