from fastapi import APIRouter
from fastapi.responses import JSONResponse

from app.services.line_service import build_paper_line

router = APIRouter(
    prefix="/fixtures",
    tags=["fixtures"]
)


@router.get("/paper-line")
def get_paper_line():
    """The built-in color production line as a config document."""
    return JSONResponse(build_paper_line().model_dump(mode="json", by_alias=True))
