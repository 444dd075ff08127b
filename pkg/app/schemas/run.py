from datetime import datetime
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.line import LineModel
from app.schemas.report import SummaryReport
from app.schemas.scenario import Intervention


class RunCreate(BaseModel):
    label: str = Field("run", max_length=100)
    model: Optional[LineModel] = Field(None, description="Line to simulate; the built-in color line when omitted")
    interventions: List[Intervention] = Field(default_factory=list)
    replications: int = Field(50, ge=1, le=1000)
    horizon: Optional[float] = Field(None, gt=0, description="Hours; the model's horizon when omitted")
    seed: int = Field(1, ge=0, lt=2**64)


class MetricRow(BaseModel):
    metric: str
    unit: str
    mean: Optional[float]
    std: Optional[float]
    ci95: Optional[float]

    model_config = ConfigDict(from_attributes=True)


class RunResponse(BaseModel):
    id: int
    label: str
    seed: int
    replications: int
    horizon: float
    model_fingerprint: str
    created_at: Optional[datetime] = None
    metrics: List[MetricRow]
    summary: SummaryReport


class CompareRequest(BaseModel):
    base_run_id: int
    alt_run_id: int
