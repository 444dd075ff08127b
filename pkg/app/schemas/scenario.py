from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.line import DistributionSpec, LineModel
from app.schemas.report import SummaryReport


class _Intervention(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class AddParallelMachine(_Intervention):
    variant: Literal["add_parallel_machine"] = "add_parallel_machine"
    station: str
    machines: int = Field(1, ge=0)
    operators: int = Field(0, ge=0)
    operators_from: Optional[str] = None
    increase_headcount: bool = False


class MoveOperators(_Intervention):
    variant: Literal["move_operators"] = "move_operators"
    from_pool: str = Field(..., alias="from")
    to_pool: str = Field(..., alias="to")
    count: int = Field(..., ge=0)


class OverlapWithTransport(_Intervention):
    variant: Literal["overlap_with_transport"] = "overlap_with_transport"
    station: str
    enabled: bool = True


class SetTransportTime(_Intervention):
    variant: Literal["set_transport_time"] = "set_transport_time"
    from_node: str = Field(..., alias="from")
    to: str
    transport_time: DistributionSpec


class SetOperatorCount(_Intervention):
    variant: Literal["set_operator_count"] = "set_operator_count"
    pool: str
    count: int = Field(..., ge=0)
    adjust_headcount: bool = False


Intervention = Annotated[
    Union[AddParallelMachine, MoveOperators, OverlapWithTransport, SetTransportTime, SetOperatorCount],
    Field(discriminator="variant"),
]


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: LineModel
    interventions: Tuple[Intervention, ...] = ()
    label: str = "scenario"


class Objective(str, Enum):
    MAX_THROUGHPUT = "max-throughput"
    MIN_COST_PER_UNIT = "min-cost-per-unit"


class CandidateEvaluation(BaseModel):
    allocation: Dict[str, int]
    outputs: Optional[float]
    cost_per_unit: Optional[float]
    objective_value: Optional[float]


class AllocationResult(BaseModel):
    objective: Objective
    total: int
    mode: Literal["exhaustive", "greedy"]
    allocation: Dict[str, int]
    summary: SummaryReport
    trace: List[CandidateEvaluation]


class CalibrationTarget(BaseModel):
    metric: str
    target: float
    tolerance: float

    @field_validator("tolerance")
    @classmethod
    def tolerance_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerance must be > 0")
        return v

    @field_validator("target")
    @classmethod
    def target_nonzero(cls, v: float) -> float:
        if v == 0:
            raise ValueError("target must be non-zero (residuals are relative)")
        return v


class FreeParameter(BaseModel):
    path: str
    lo: float
    hi: float
    integer: bool = False


class TargetResidual(BaseModel):
    metric: str
    target: float
    achieved: Optional[float]
    residual: Optional[float]
    within_tolerance: bool


class CalibrationStep(BaseModel):
    start: int
    sweep: int
    parameters: Dict[str, float]
    objective: float


class CalibrationResult(BaseModel):
    parameters: Dict[str, float]
    objective: float
    evaluations: int
    residuals: List[TargetResidual]
    trace: List[CalibrationStep] = Field(default_factory=list)

    @property
    def converged(self) -> bool:
        return all(r.within_tolerance for r in self.residuals)

    def parameter_block(self) -> Dict[str, Dict[str, float]]:
        return {"parameters": dict(self.parameters)}


class RunSpec(BaseModel):
    config: Optional[str] = None
    scenario: Optional[str] = None
    replications: int = Field(50, ge=1)
    horizon: float = Field(8.0, gt=0)
    seed: int = Field(1, ge=0, lt=2 ** 64)
    out_dir: Optional[str] = None
    workers: int = Field(1, ge=1)
