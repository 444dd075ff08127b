from .analysis import router as analysis_router
from .fixtures import router as fixtures_router
from .runs import router as runs_router

__all__ = ["analysis_router", "fixtures_router", "runs_router"]
