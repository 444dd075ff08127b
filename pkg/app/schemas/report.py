from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from app.schemas.line import PoolKind

# Report metric names in report row order, with units and console labels
REPORT_METRICS: Tuple[Tuple[str, str, str], ...] = (
    ("average_outputs", "number", "Average outputs"),
    ("average_number_in_queue", "number", "Average number in queue"),
    ("average_waiting_time_in_queue", "hour", "Average waiting time in queue"),
    ("average_resource_utilization", "fraction", "Average percentage of resource utilization"),
    ("value_added_cost", "dollar", "Value added cost"),
    ("non_value_added_cost", "dollar", "Non-value added cost"),
    ("busy_cost", "dollar", "Busy cost"),
    ("idle_cost", "dollar", "Idle cost"),
    ("total_cost", "dollar", "Total cost"),
    ("cost_per_unit", "dollar/unit", "Cost per unit"),
)
METRIC_UNITS: Dict[str, str] = {name: unit for name, unit, _ in REPORT_METRICS}


class CostBreakdown(BaseModel):
    value_added: float = 0.0
    non_value_added: float = 0.0
    busy: float = 0.0
    idle: float = 0.0
    total: float = 0.0


class PoolUsage(BaseModel):
    """Busy hours split by value class plus idle hours, for one pool."""
    busy_va_hours: float = 0.0
    busy_nva_hours: float = 0.0
    idle_hours: float = 0.0


class QueueStats(BaseModel):
    average_length: float
    mean_wait: float
    max_wait: float
    entries: int


class PoolStats(BaseModel):
    kind: PoolKind
    capacity: int
    busy_hours: float
    idle_hours: float
    utilization: float
    busy_va_hours: float
    busy_nva_hours: float


class ReplicationResult(BaseModel):
    replication: int = 0
    seed: int
    horizon: float
    model_fingerprint: str
    outputs: int
    created: int
    wip_at_horizon: int
    forced_passes: int = 0
    events: int
    mean_flow_time: float
    average_number_in_queue: float
    average_waiting_time_in_queue: float
    average_resource_utilization: float
    queues: Dict[str, QueueStats]
    pools: Dict[str, PoolStats]
    cost: CostBreakdown

    def metric(self, name: str) -> Optional[float]:
        values = {
            "average_outputs": float(self.outputs),
            "average_number_in_queue": self.average_number_in_queue,
            "average_waiting_time_in_queue": self.average_waiting_time_in_queue,
            "average_resource_utilization": self.average_resource_utilization,
            "value_added_cost": self.cost.value_added,
            "non_value_added_cost": self.cost.non_value_added,
            "busy_cost": self.cost.busy,
            "idle_cost": self.cost.idle,
            "total_cost": self.cost.total,
            "cost_per_unit": self.cost.total / self.outputs if self.outputs else None,
        }
        return values[name]


class MetricSummary(BaseModel):
    mean: Optional[float]
    std: Optional[float]
    ci95_halfwidth: Optional[float]


class QueueSummary(BaseModel):
    average_length: MetricSummary
    mean_wait: MetricSummary
    max_wait: MetricSummary


class PoolSummary(BaseModel):
    kind: PoolKind
    capacity: int
    busy_hours: MetricSummary
    idle_hours: MetricSummary
    utilization: MetricSummary


class SummaryReport(BaseModel):
    replications: int
    horizon: float
    model_fingerprint: str
    metrics: Dict[str, MetricSummary]
    queues: Dict[str, QueueSummary]
    pools: Dict[str, PoolSummary]
    mean_flow_time: MetricSummary
    wip_at_horizon: MetricSummary
    average_number_in_queue_per_queue_mean: float = 0.0


class BottleneckEntry(BaseModel):
    rank: int
    station: str
    score: float
    utilization: float
    mean_wait: float


class BottleneckRanking(BaseModel):
    entries: List[BottleneckEntry]
    rule: str = "machine-pool utilization, then mean queue wait, then declaration order"

    @property
    def bottleneck(self) -> str:
        return self.entries[0].station


class ProfileVerdict(BaseModel):
    station: str
    upstream: List[str]
    downstream: List[str]
    upstream_mean: float
    downstream_mean: float
    verdict: bool
    notes: List[str] = Field(default_factory=list)


class MetricDiff(BaseModel):
    metric: str
    unit: str
    base: Optional[float]
    alternative: Optional[float]
    absolute_delta: Optional[float]
    percent_delta: Optional[float] = Field(None, description="None when base is 0 (reported as n/a)")


class PairRow(BaseModel):
    name: str
    base: Optional[float]
    alternative: Optional[float]


class UnitCostRow(BaseModel):
    scenario: str
    outputs: Optional[float]
    total_cost: Optional[float]
    cost_per_unit: Optional[float]


class DiffReport(BaseModel):
    metrics: List[MetricDiff]
    operator_utilization: List[PairRow]
    queue_waits: List[PairRow]
    unit_cost: List[UnitCostRow]

    def metric(self, name: str) -> MetricDiff:
        for row in self.metrics:
            if row.metric == name:
                return row
        raise KeyError(name)
