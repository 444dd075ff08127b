"""
HTTP service for simulating color production lines and comparing scenarios.
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from sqlalchemy import text
from starlette.exceptions import HTTPException as StarletteHTTPException

from app.api import analysis, fixtures, runs
from app.core.config import settings
from app.core.database import engine, init_db
from app.core.exceptions import (
    AnalysisError, LineSimError, ModelError, RunNotFound, ScenarioError,
    SchemaError, SimulationError,
)
from app.core.logging import configure_logging

configure_logging(settings.LOG_LEVEL, settings.DEBUG)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Handle application lifecycle events."""
    logger.info("Starting line simulation service ...")
    try:
        init_db()
        logger.info("Database tables created/verified")
    except Exception as e:
        logger.error(f"Failed to create database tables: {e}")
        raise

    with engine.connect() as conn:
        conn.execute(text("SELECT 1"))
    logger.info("Database connection pool initialized")

    yield

    logger.info("Shutting down line simulation service...")
    engine.dispose()
    logger.info("Database connections closed")


app = FastAPI(
    title="Lineflow",
    description="""
    Discrete-event simulation of a color production line: replicated runs,
    bottleneck ranking and scenario comparison.
    """,
    version="1.0.0",
    docs_url="/docs",
    redoc_url="/redoc",
    openapi_url="/openapi.json",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
    expose_headers=["X-Error-Code", "X-Request-ID"]
)


def _error(request: Request, status_code: int, detail, error_code: str, **extra) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content={
            "detail": detail,
            "error_code": error_code,
            "request_id": getattr(request.state, 'request_id', None),
            **extra,
        }
    )


@app.exception_handler(RunNotFound)
async def run_not_found_handler(request: Request, exc: RunNotFound):
    return _error(request, 404, str(exc), "RUN_NOT_FOUND")


@app.exception_handler(ModelError)
async def model_error_handler(request: Request, exc: ModelError):
    """Invalid line models answer 422 with every violation."""
    violations = exc.violations if isinstance(exc, SchemaError) else [str(exc)]
    return _error(request, 422, str(exc), "INVALID_MODEL", violations=violations)


@app.exception_handler(ScenarioError)
async def scenario_error_handler(request: Request, exc: ScenarioError):
    return _error(request, 400, str(exc), "SCENARIO_ERROR")


@app.exception_handler(AnalysisError)
async def analysis_error_handler(request: Request, exc: AnalysisError):
    return _error(request, 400, str(exc), "ANALYSIS_ERROR")


@app.exception_handler(SimulationError)
async def simulation_error_handler(request: Request, exc: SimulationError):
    return _error(request, 400, str(exc), "SIMULATION_ERROR")


@app.exception_handler(LineSimError)
async def line_sim_error_handler(request: Request, exc: LineSimError):
    return _error(request, 400, str(exc), "LINE_ERROR")


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """Handle validation errors with better formatting."""
    errors = []
    for error in exc.errors():
        errors.append({
            "field": ".".join(str(x) for x in error["loc"][1:]),
            "message": error["msg"],
            "type": error["type"]
        })
    return _error(request, 422, "Validation error", "VALIDATION_ERROR", errors=errors)


@app.exception_handler(StarletteHTTPException)
async def http_exception_handler(request: Request, exc: StarletteHTTPException):
    return _error(request, exc.status_code, exc.detail, f"HTTP_{exc.status_code}")


@app.exception_handler(Exception)
async def general_exception_handler(request: Request, exc: Exception):
    """Handle unexpected exceptions."""
    logger.error(f"Unexpected error: {exc}", exc_info=True)
    detail = str(exc) if settings.DEBUG else "An unexpected error occurred"
    return _error(request, 500, detail, "INTERNAL_ERROR")


app.include_router(runs.router, prefix="/api/v1")
app.include_router(analysis.router, prefix="/api/v1")
app.include_router(fixtures.router, prefix="/api/v1")

if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=8000,
        reload=settings.DEBUG,
        log_level="debug" if settings.DEBUG else "info",
        access_log=True
    )
