"""
CSV and console output of reports.

CSV files are written through pandas with a fixed column order and
``float_format="%.6f"``, so the same report always produces the same bytes.
Missing values are written as ``n/a``.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from app.schemas.report import (
    REPORT_METRICS, BottleneckRanking, DiffReport, MetricSummary, ProfileVerdict,
    SummaryReport,
)
from app.schemas.scenario import AllocationResult, CalibrationResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"
NA = "n/a"
_LABELS = {name: label for name, _, label in REPORT_METRICS}


def summary_frame(summary: SummaryReport) -> pd.DataFrame:
    rows = [
        {"metric": name, "unit": unit, **_stat_columns(summary.metrics[name])}
        for name, unit, _ in REPORT_METRICS
    ]
    return pd.DataFrame(rows, columns=["metric", "unit", "mean", "std", "ci95_halfwidth"])


def queues_frame(summary: SummaryReport) -> pd.DataFrame:
    rows = []
    for queue, stats in summary.queues.items():
        for metric in ("average_length", "mean_wait", "max_wait"):
            rows.append({"queue": queue, "metric": metric, **_stat_columns(getattr(stats, metric))})
    return pd.DataFrame(rows, columns=["queue", "metric", "mean", "std", "ci95_halfwidth"])


def pools_frame(summary: SummaryReport) -> pd.DataFrame:
    rows = []
    for pool_id, stats in summary.pools.items():
        for metric in ("busy_hours", "idle_hours", "utilization"):
            rows.append({
                "pool": pool_id, "kind": stats.kind.value, "capacity": stats.capacity,
                "metric": metric, **_stat_columns(getattr(stats, metric)),
            })
    return pd.DataFrame(rows, columns=["pool", "kind", "capacity", "metric", "mean", "std", "ci95_halfwidth"])


def diff_frame(diff: DiffReport) -> pd.DataFrame:
    return pd.DataFrame(
        [row.model_dump() for row in diff.metrics],
        columns=["metric", "unit", "base", "alternative", "absolute_delta", "percent_delta"],
    )


def unit_cost_frame(diff: DiffReport) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in diff.unit_cost],
                        columns=["scenario", "outputs", "total_cost", "cost_per_unit"])


def operator_utilization_frame(diff: DiffReport) -> pd.DataFrame:
    return pd.DataFrame(
        [{"operator_pool": r.name, "current": r.base, "developed": r.alternative}
         for r in diff.operator_utilization],
        columns=["operator_pool", "current", "developed"],
    )


def queue_waits_frame(diff: DiffReport) -> pd.DataFrame:
    return pd.DataFrame(
        [{"queue": r.name, "current_mean_wait_h": r.base, "developed_mean_wait_h": r.alternative}
         for r in diff.queue_waits],
        columns=["queue", "current_mean_wait_h", "developed_mean_wait_h"],
    )


def bottleneck_frame(ranking: BottleneckRanking) -> pd.DataFrame:
    return pd.DataFrame(
        [{"rank": e.rank, "station": e.station, "score": e.score,
          "utilization": e.utilization, "mean_wait_h": e.mean_wait} for e in ranking.entries],
        columns=["rank", "station", "score", "utilization", "mean_wait_h"],
    )


def allocation_trace_frame(result: AllocationResult) -> pd.DataFrame:
    pools = list(result.allocation)
    rows = [
        {**{p: c.allocation[p] for p in pools}, "outputs": c.outputs,
         "cost_per_unit": c.cost_per_unit, "objective": c.objective_value}
        for c in result.trace
    ]
    return pd.DataFrame(rows, columns=pools + ["outputs", "cost_per_unit", "objective"])


def calibration_trace_frame(result: CalibrationResult) -> pd.DataFrame:
    paths = list(result.parameters)
    rows = [
        {"start": s.start, "sweep": s.sweep, **{p: s.parameters[p] for p in paths}, "objective": s.objective}
        for s in result.trace
    ]
    return pd.DataFrame(rows, columns=["start", "sweep"] + paths + ["objective"])


def _stat_columns(stat: MetricSummary) -> dict:
    return {"mean": stat.mean, "std": stat.std, "ci95_halfwidth": stat.ci95_halfwidth}


class ReportWriter:
    """Writes report files into one output directory."""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)

    def write(self, frame: pd.DataFrame, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep=NA, lineterminator="\n")
        logger.info("Wrote %s", path)
        return path

    def write_text(self, text: str, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8")
        logger.info("Wrote %s", path)
        return path

    def write_summary(self, summary: SummaryReport, prefix: str = "") -> List[Path]:
        return [
            self.write(summary_frame(summary), f"{prefix}summary.csv"),
            self.write(queues_frame(summary), f"{prefix}queues.csv"),
            self.write(pools_frame(summary), f"{prefix}pools.csv"),
        ]

    def write_diff(self, diff: DiffReport) -> List[Path]:
        return [
            self.write(diff_frame(diff), "diff.csv"),
            self.write(unit_cost_frame(diff), "fig3_unit_cost.csv"),
            self.write(operator_utilization_frame(diff), "fig4_operator_utilization.csv"),
            self.write(queue_waits_frame(diff), "fig5_queue_waits.csv"),
        ]

    def write_bottleneck(self, ranking: BottleneckRanking) -> Path:
        return self.write(bottleneck_frame(ranking), "bottleneck.csv")


# Console

def _fmt(value: Optional[float], digits: int = 3) -> str:
    return NA if value is None else f"{value:,.{digits}f}"


def summary_table(summary: SummaryReport, title: Optional[str] = None) -> Table:
    table = Table(title=title or f"{summary.replications} replications, {summary.horizon:g} h")
    for column in ("Measure", "Unit", "Mean", "Std", "95% half-width"):
        table.add_column(column, justify="left" if column in ("Measure", "Unit") else "right")
    for name, unit, label in REPORT_METRICS:
        stat = summary.metrics[name]
        table.add_row(label, unit, _fmt(stat.mean), _fmt(stat.std), _fmt(stat.ci95_halfwidth))
    return table


def diff_table(diff: DiffReport) -> Table:
    table = Table(title="Scenario comparison")
    for column in ("Measure", "Unit", "Current", "Developed", "Delta", "Delta %"):
        table.add_column(column, justify="left" if column in ("Measure", "Unit") else "right")
    for row in diff.metrics:
        table.add_row(_LABELS[row.metric], row.unit, _fmt(row.base), _fmt(row.alternative),
                      _fmt(row.absolute_delta), _fmt(row.percent_delta, 1))
    return table


def bottleneck_table(ranking: BottleneckRanking, profile: Optional[ProfileVerdict] = None) -> Table:
    table = Table(title="Bottleneck ranking", caption=ranking.rule)
    for column in ("Rank", "Station", "Utilization", "Mean wait (h)"):
        table.add_column(column, justify="left" if column == "Station" else "right")
    for e in ranking.entries:
        table.add_row(str(e.rank), e.station, _fmt(e.utilization), _fmt(e.mean_wait))
    if profile is not None:
        table.caption = (
            f"{ranking.rule}; upstream {profile.upstream_mean:.3f} vs downstream "
            f"{profile.downstream_mean:.3f} -> {'consistent' if profile.verdict else 'not consistent'}"
        )
    return table


def residual_table(result: CalibrationResult) -> Table:
    table = Table(title="Calibration residuals")
    for column in ("Metric", "Target", "Achieved", "Residual", "Within tolerance"):
        table.add_column(column, justify="left" if column == "Metric" else "right")
    for r in result.residuals:
        table.add_row(r.metric, _fmt(r.target), _fmt(r.achieved), _fmt(r.residual),
                      "yes" if r.within_tolerance else "no")
    return table


def allocation_table(result: AllocationResult) -> Table:
    table = Table(title=f"Operator allocation ({result.objective.value}, {result.mode})")
    table.add_column("Pool")
    table.add_column("Operators", justify="right")
    for pool, count in result.allocation.items():
        table.add_row(pool, str(count))
    return table


def print_tables(tables: Iterable[Table], console: Optional[Console] = None) -> None:
    console = console or Console()
    for table in tables:
        console.print(table)


def frames_to_stdout(frames: Sequence[pd.DataFrame], console: Optional[Console] = None) -> None:
    console = console or Console()
    for frame in frames:
        console.print(frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep=NA,
                                   lineterminator="\n"), end="", markup=False, highlight=False,
                      soft_wrap=True)
