"""
Declarative production-line description.

Everything here is immutable once built; cross-field invariants are checked
by ``app.services.validators.LineValidator`` so that an invalid model can
still be constructed and reported on in full.
"""
from enum import Enum
from typing import Annotated, Dict, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

SOURCE = "Source"
SINK = "Sink"


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# Distributions (all parameters in hours)

class ConstantDist(FrozenModel):
    family: Literal["constant"] = "constant"
    value: float


class ExponentialDist(FrozenModel):
    family: Literal["exponential"] = "exponential"
    mean: float


class UniformDist(FrozenModel):
    family: Literal["uniform"] = "uniform"
    lo: float
    hi: float


class TriangularDist(FrozenModel):
    family: Literal["triangular"] = "triangular"
    lo: float
    mode: float
    hi: float


DistributionSpec = Annotated[
    Union[ConstantDist, ExponentialDist, UniformDist, TriangularDist],
    Field(discriminator="family"),
]

ZERO = ConstantDist(value=0.0)


class PoolKind(str, Enum):
    MACHINE = "machine"
    OPERATOR = "operator"


class ValueClass(str, Enum):
    VALUE_ADDING = "value_adding"
    NON_VALUE_ADDING = "non_value_adding"


class PoolSpec(FrozenModel):
    id: str = Field(..., min_length=1)
    kind: PoolKind
    capacity: int = Field(..., ge=0)


class CostRate(FrozenModel):
    busy_rate: float = Field(0.0, description="dollars per busy unit-hour")
    idle_rate: float = Field(0.0, description="dollars per idle unit-hour")


class StationSpec(FrozenModel):
    id: str = Field(..., min_length=1)
    machine_pool: str
    operator_pool: Optional[str] = None
    operators_required: int = Field(0, ge=0)
    service: DistributionSpec
    value_class: ValueClass = ValueClass.VALUE_ADDING
    overlap_with_outbound_transport: bool = False


class Branch(FrozenModel):
    to: str
    probability: float = 1.0
    transport_time: DistributionSpec = ZERO
    handler_pool: Optional[str] = None
    handlers: int = Field(0, ge=0)


class RouteSpec(FrozenModel):
    from_node: str = Field(..., alias="from")
    branches: Tuple[Branch, ...]

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class QcSpec(FrozenModel):
    station: str
    fail_probability: float = Field(..., ge=0.0, le=1.0)
    rework_target: str
    rework_transport: DistributionSpec = ZERO
    max_attempts: Optional[int] = Field(None, ge=1)


class SourceSpec(FrozenModel):
    interarrival: DistributionSpec
    batch_size: int = 1
    first_arrival_hours: float = 0.0


class LineModel(FrozenModel):
    name: str = "line"
    stations: Tuple[StationSpec, ...]
    pools: Tuple[PoolSpec, ...]
    routes: Tuple[RouteSpec, ...] = ()
    qc: Optional[QcSpec] = None
    source: Optional[SourceSpec] = None
    horizon_hours: float = 8.0
    headcount: int = 0
    cost_rates: Dict[str, CostRate] = Field(default_factory=dict)

    def station(self, station_id: str) -> Optional[StationSpec]:
        for station in self.stations:
            if station.id == station_id:
                return station
        return None

    def pool(self, pool_id: str) -> Optional[PoolSpec]:
        for pool in self.pools:
            if pool.id == pool_id:
                return pool
        return None

    def route_from(self, node: str) -> Optional[RouteSpec]:
        for route in self.routes:
            if route.from_node == node:
                return route
        return None

    def machine_count(self, station_id: str) -> int:
        station = self.station(station_id)
        pool = self.pool(station.machine_pool) if station else None
        return pool.capacity if pool else 0

    def operator_capacity(self) -> int:
        return sum(p.capacity for p in self.pools if p.kind == PoolKind.OPERATOR)

    def station_index(self, station_id: str) -> int:
        return [s.id for s in self.stations].index(station_id)
