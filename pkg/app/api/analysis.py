from fastapi import APIRouter, Depends
from sqlalchemy.orm import Session

from app.api.deps import get_db
from app.schemas.report import DiffReport
from app.schemas.run import CompareRequest
from app.services.run_service import run_service_obj

router = APIRouter(
    prefix="/compare",
    tags=["analysis"]
)


@router.post("", response_model=DiffReport)
def compare_runs(
        request: CompareRequest,
        db: Session = Depends(get_db)
):
    """
    Diff two stored runs: every report metric, operator utilization
    per pool, mean wait per queue and the unit cost of both.
    """
    return run_service_obj.compare(db, request.base_run_id, request.alt_run_id)
