"""
Simulation run endpoints.
"""
from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session

from app.api.deps import get_db
from app.core.exceptions import LineSimError, RunNotFound
from app.schemas.report import BottleneckRanking
from app.schemas.run import RunCreate, RunResponse
from app.services.run_service import run_service_obj

router = APIRouter(
    prefix="/runs",
    tags=["runs"],
    responses={404: {"description": "Run not found"}}
)


@router.post("", response_model=RunResponse, status_code=201)
def create_run(
        request: RunCreate,
        db: Session = Depends(get_db)
):
    """
    Simulate a line and store the summary.

    The posted interventions are applied to the model in order before
    the replications run. Without a model the built-in color line is used.
    """
    run = run_service_obj.create_run(db, request)
    return run_service_obj.to_response(run)


@router.get("/{run_id}", response_model=RunResponse)
def get_run(
        run_id: int,
        db: Session = Depends(get_db)
):
    try:
        return run_service_obj.to_response(run_service_obj.get_run(db, run_id))
    except RunNotFound as e:
        raise HTTPException(status_code=404, detail=str(e))


@router.get("/{run_id}/bottleneck", response_model=BottleneckRanking)
def get_bottleneck(
        run_id: int,
        db: Session = Depends(get_db)
):
    """Stations of a stored run ranked by machine utilization, then queue wait."""
    try:
        return run_service_obj.bottleneck(db, run_id)
    except RunNotFound as e:
        raise HTTPException(status_code=404, detail=str(e))
    except LineSimError as e:
        raise HTTPException(status_code=400, detail=str(e))
