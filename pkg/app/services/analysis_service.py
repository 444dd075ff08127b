"""
Bottleneck ranking, utilization profile around a station, and scenario diffs.
"""
import logging
from typing import Dict, List, Optional

import numpy as np

from app.core.exceptions import MissingStationError, SchemaMismatchError
from app.schemas.line import SINK, SOURCE, LineModel, PoolKind
from app.schemas.report import (
    REPORT_METRICS, BottleneckEntry, BottleneckRanking, DiffReport, MetricDiff,
    PairRow, ProfileVerdict, SummaryReport, UnitCostRow,
)
from app.services.validators import ancestors, descendants, route_graph

logger = logging.getLogger(__name__)


def _station_utilization(summary: SummaryReport, model: LineModel) -> Dict[str, float]:
    utilization = {}
    for station in model.stations:
        pool = summary.pools.get(station.machine_pool)
        if pool is None or station.id not in summary.queues:
            raise MissingStationError(f"Summary has no data for station {station.id}")
        utilization[station.id] = pool.utilization.mean or 0.0
    return utilization


def detect_bottleneck(summary: SummaryReport, model: LineModel) -> BottleneckRanking:
    """Rank stations by machine-pool utilization, then mean queue wait, then declaration order."""
    utilization = _station_utilization(summary, model)
    rows = []
    for index, station in enumerate(model.stations):
        wait = summary.queues[station.id].mean_wait.mean or 0.0
        rows.append((-utilization[station.id], -wait, index, station.id, wait))
    rows.sort()
    entries = [
        BottleneckEntry(rank=rank, station=station_id, score=-neg_util,
                        utilization=-neg_util, mean_wait=wait)
        for rank, (neg_util, _, _, station_id, wait) in enumerate(rows, start=1)
    ]
    logger.info("Bottleneck: %s (utilization %.3f)", entries[0].station, entries[0].utilization)
    return BottleneckRanking(entries=entries)


def profile_around(summary: SummaryReport, model: LineModel, station: str) -> ProfileVerdict:
    """Compare mean utilization of the stations feeding ``station`` with those it feeds."""
    if model.station(station) is None:
        raise MissingStationError(f"Unknown station {station}")
    utilization = _station_utilization(summary, model)
    graph = route_graph(model)
    before = ancestors(graph, station)
    after = descendants(graph, station)
    if SOURCE not in before or SINK not in after:
        raise MissingStationError(f"Station {station} is not on a Source to Sink path")

    upstream = [s.id for s in model.stations if s.id in before]
    downstream = [s.id for s in model.stations if s.id in after]
    notes: List[str] = []
    if upstream:
        upstream_mean = float(np.mean([utilization[s] for s in upstream]))
    else:
        upstream_mean = 1.0
        notes.append("first station: upstream mean set to 1.0")
    if downstream:
        downstream_mean = float(np.mean([utilization[s] for s in downstream]))
    else:
        downstream_mean = 0.0
        notes.append("last station: downstream mean set to 0.0")
    return ProfileVerdict(
        station=station,
        upstream=upstream,
        downstream=downstream,
        upstream_mean=upstream_mean,
        downstream_mean=downstream_mean,
        verdict=upstream_mean > downstream_mean,
        notes=notes,
    )


def _delta(base: Optional[float], alt: Optional[float]) -> tuple:
    if base is None or alt is None:
        return None, None
    absolute = alt - base
    percent = absolute / base * 100.0 if base != 0 else None
    return absolute, percent


def compare_scenarios(base: SummaryReport, alt: SummaryReport,
                      base_label: str = "current", alt_label: str = "developed") -> DiffReport:
    if set(base.metrics) != set(alt.metrics):
        raise SchemaMismatchError("Reports do not share the same metric schema")

    metrics = []
    for name, unit, _ in REPORT_METRICS:
        if name not in base.metrics:
            continue
        b, a = base.metrics[name].mean, alt.metrics[name].mean
        absolute, percent = _delta(b, a)
        metrics.append(MetricDiff(metric=name, unit=unit, base=b, alternative=a,
                                  absolute_delta=absolute, percent_delta=percent))

    operator_pools = [p for p, s in base.pools.items() if s.kind == PoolKind.OPERATOR]
    operator_pools += [p for p, s in alt.pools.items()
                       if s.kind == PoolKind.OPERATOR and p not in base.pools]
    operator_utilization = [
        PairRow(
            name=pool,
            base=base.pools[pool].utilization.mean if pool in base.pools else None,
            alternative=alt.pools[pool].utilization.mean if pool in alt.pools else None,
        )
        for pool in operator_pools
    ]

    queue_names = list(base.queues) + [q for q in alt.queues if q not in base.queues]
    queue_waits = [
        PairRow(
            name=queue,
            base=base.queues[queue].mean_wait.mean if queue in base.queues else None,
            alternative=alt.queues[queue].mean_wait.mean if queue in alt.queues else None,
        )
        for queue in queue_names
    ]

    unit_cost = [
        UnitCostRow(
            scenario=label,
            outputs=report.metrics["average_outputs"].mean,
            total_cost=report.metrics["total_cost"].mean,
            cost_per_unit=report.metrics["cost_per_unit"].mean,
        )
        for label, report in ((base_label, base), (alt_label, alt))
    ]
    return DiffReport(metrics=metrics, operator_utilization=operator_utilization,
                      queue_waits=queue_waits, unit_cost=unit_cost)
