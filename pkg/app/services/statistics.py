"""
Time-weighted and tally statistics, the busy/idle cost model and
cross-replication aggregation.
"""
import logging
import math
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.core.exceptions import (
    EmptyListError, EmptySeriesError, MixedModelError, NegativeTimeError,
    StatsError, ZeroOutputError,
)
from app.schemas.line import CostRate
from app.schemas.report import (
    REPORT_METRICS, CostBreakdown, MetricSummary, PoolSummary, PoolUsage,
    QueueSummary, ReplicationResult, SummaryReport,
)

logger = logging.getLogger(__name__)


class TimeWeightedAccumulator:
    """Running integral of a piecewise-constant value."""

    __slots__ = ("value", "last_time", "area")

    def __init__(self, value: float = 0.0, start: float = 0.0):
        self.value = value
        self.last_time = start
        self.area = 0.0

    def update(self, now: float, value: float) -> None:
        self.advance(now)
        self.value = value

    def advance(self, now: float) -> None:
        self.area += self.value * (now - self.last_time)
        self.last_time = now


def time_weighted_average(series: Sequence[Tuple[float, float]], horizon: float) -> float:
    """Integral of a step trajectory over [0, horizon] divided by horizon."""
    if not series:
        raise EmptySeriesError("Time-weighted average of an empty series")
    if horizon <= 0:
        raise StatsError("Horizon must be positive")
    if series[0][0] != 0:
        raise StatsError("Series must start at time 0")
    area = 0.0
    for (t, value), (t_next, _) in zip(series, series[1:]):
        if t_next < t:
            raise StatsError("Series times must be non-decreasing")
        area += value * (min(t_next, horizon) - min(t, horizon))
    last_t, last_value = series[-1]
    if last_t < horizon:
        area += last_value * (horizon - last_t)
    return area / horizon


def compute_costs(usage: Mapping[str, PoolUsage], rates: Mapping[str, CostRate]) -> CostBreakdown:
    """
    Busy cost split into value-added and non-value-added parts, plus idle cost.

    busy is defined as value_added + non_value_added and total as busy + idle,
    so both closure identities hold exactly.
    """
    value_added = 0.0
    non_value_added = 0.0
    idle = 0.0
    for pool_id, hours in usage.items():
        if min(hours.busy_va_hours, hours.busy_nva_hours, hours.idle_hours) < 0:
            raise NegativeTimeError(f"Pool {pool_id} reports negative hours")
        rate = rates.get(pool_id, CostRate())
        value_added += hours.busy_va_hours * rate.busy_rate
        non_value_added += hours.busy_nva_hours * rate.busy_rate
        idle += hours.idle_hours * rate.idle_rate
    busy = value_added + non_value_added
    return CostBreakdown(
        value_added=value_added,
        non_value_added=non_value_added,
        busy=busy,
        idle=idle,
        total=busy + idle,
    )


def cost_per_unit(total_cost: float, outputs: int) -> float:
    if outputs < 0:
        raise StatsError("Outputs cannot be negative")
    if outputs == 0:
        raise ZeroOutputError("Cost per unit is undefined with zero outputs")
    return total_cost / outputs


def t_quantile(n: int) -> float:
    return float(stats.t.ppf(0.975, n - 1))


def summarize(values: Iterable[Optional[float]]) -> MetricSummary:
    """
    Mean, sample std and 95% half-width; missing values are skipped.

    Values are sorted first so the result does not depend on their order.
    """
    data = np.sort(np.array([v for v in values if v is not None], dtype=float))
    n = len(data)
    if n == 0:
        return MetricSummary(mean=None, std=None, ci95_halfwidth=None)
    mean = float(np.mean(data))
    if n == 1:
        return MetricSummary(mean=mean, std=0.0, ci95_halfwidth=0.0)
    std = float(np.std(data, ddof=1))
    return MetricSummary(mean=mean, std=std, ci95_halfwidth=t_quantile(n) * std / math.sqrt(n))


def aggregate_replications(results: List[ReplicationResult]) -> SummaryReport:
    if not results:
        raise EmptyListError("No replication results to aggregate")
    fingerprints = {(r.model_fingerprint, r.horizon) for r in results}
    if len(fingerprints) > 1:
        raise MixedModelError("Replications come from different models or horizons")

    metrics: Dict[str, MetricSummary] = {}
    for name, _, _ in REPORT_METRICS:
        if name == "cost_per_unit":
            continue
        metrics[name] = summarize(r.metric(name) for r in results)

    # derived ratio of means; spread from the per-replication ratios
    spread = summarize(r.metric("cost_per_unit") for r in results)
    mean_outputs = metrics["average_outputs"].mean
    mean_cost = metrics["total_cost"].mean
    metrics["cost_per_unit"] = MetricSummary(
        mean=mean_cost / mean_outputs if mean_outputs else None,
        std=spread.std,
        ci95_halfwidth=spread.ci95_halfwidth,
    )

    first = results[0]
    queues = {
        name: QueueSummary(
            average_length=summarize(r.queues[name].average_length for r in results),
            mean_wait=summarize(r.queues[name].mean_wait for r in results),
            max_wait=summarize(r.queues[name].max_wait for r in results),
        )
        for name in first.queues
    }
    pools = {
        pool_id: PoolSummary(
            kind=stats_.kind,
            capacity=stats_.capacity,
            busy_hours=summarize(r.pools[pool_id].busy_hours for r in results),
            idle_hours=summarize(r.pools[pool_id].idle_hours for r in results),
            utilization=summarize(r.pools[pool_id].utilization for r in results),
        )
        for pool_id, stats_ in first.pools.items()
    }
    per_queue_mean = (
        float(np.mean([q.average_length.mean for q in queues.values()])) if queues else 0.0
    )
    if mean_outputs == 0:
        logger.warning("Mean outputs are zero; cost per unit is reported as n/a")
    logger.debug("Aggregated %d replications", len(results))
    return SummaryReport(
        replications=len(results),
        horizon=first.horizon,
        model_fingerprint=first.model_fingerprint,
        metrics=metrics,
        queues=queues,
        pools=pools,
        mean_flow_time=summarize(r.mean_flow_time for r in results),
        wip_at_horizon=summarize(float(r.wip_at_horizon) for r in results),
        average_number_in_queue_per_queue_mean=per_queue_mean,
    )
