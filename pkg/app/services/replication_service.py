import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

from app.core.config import settings
from app.core.exceptions import SchemaError
from app.schemas.line import LineModel
from app.schemas.report import ReplicationResult, SummaryReport
from app.services.line_service import model_fingerprint
from app.services.simulator import ReplicationExecutor
from app.services.statistics import aggregate_replications
from app.services.validators import LineValidator

logger = logging.getLogger(__name__)

_Job = Tuple[LineModel, int, float, int, int, str]


def _run_job(job: _Job) -> ReplicationResult:
    model, seed, horizon, replication, max_events, fingerprint = job
    return ReplicationExecutor(model, seed, horizon, replication, max_events, fingerprint).run()


class ReplicationService:
    """Runs independent replications of one model and aggregates them."""

    def run_replications(self, model: LineModel, replications: Optional[int] = None,
                         seed: Optional[int] = None, horizon: Optional[float] = None,
                         workers: Optional[int] = None,
                         max_events: Optional[int] = None) -> List[ReplicationResult]:
        """
        Replication r uses the streams keyed by (seed, r), so two models run
        with the same seed share their random numbers replication by replication.
        Results come back in replication order whatever the worker count.
        """
        replications = settings.DEFAULT_REPLICATIONS if replications is None else replications
        seed = settings.DEFAULT_SEED if seed is None else seed
        horizon = model.horizon_hours if horizon is None else horizon
        workers = settings.WORKERS if workers is None else workers
        max_events = settings.MAX_EVENTS if max_events is None else max_events
        if replications < 1:
            raise ValueError("replications must be >= 1")

        violations = LineValidator().validate(model)
        if violations:
            raise SchemaError(violations)

        fingerprint = model_fingerprint(model)
        jobs = [(model, seed, horizon, r, max_events, fingerprint) for r in range(replications)]
        logger.info("Running %d replications of '%s' (%.2fh, seed %d, %d worker(s))",
                    replications, model.name, horizon, seed, workers)
        if workers > 1 and replications > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(_run_job, jobs))
        return [_run_job(job) for job in jobs]

    def simulate(self, model: LineModel, replications: Optional[int] = None,
                 seed: Optional[int] = None, horizon: Optional[float] = None,
                 workers: Optional[int] = None) -> SummaryReport:
        results = self.run_replications(model, replications, seed, horizon, workers)
        return aggregate_replications(results)


replication_service = ReplicationService()
