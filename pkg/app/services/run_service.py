import logging

from sqlalchemy.orm import Session

from app.core.exceptions import RunNotFound
from app.models.metric import RunMetric
from app.models.run import SimulationRun
from app.schemas.line import LineModel
from app.schemas.report import REPORT_METRICS, BottleneckRanking, DiffReport, SummaryReport
from app.schemas.run import MetricRow, RunCreate, RunResponse
from app.services.analysis_service import compare_scenarios, detect_bottleneck
from app.services.line_service import build_paper_line
from app.services.replication_service import replication_service
from app.services.scenario_service import scenario_service

logger = logging.getLogger(__name__)


class RunService:
    """Simulates lines on request and keeps the summaries."""

    def create_run(self, db: Session, request: RunCreate) -> SimulationRun:
        model = request.model or build_paper_line()
        model = scenario_service.apply_interventions(model, request.interventions)
        summary = replication_service.simulate(model, request.replications, request.seed, request.horizon)

        run = SimulationRun(
            label=request.label,
            seed=str(request.seed),
            replications=summary.replications,
            horizon=summary.horizon,
            model_fingerprint=summary.model_fingerprint,
        )
        run.set_model(model.model_dump(mode="json", by_alias=True))
        run.set_summary(summary.model_dump(mode="json"))
        for name, unit, _ in REPORT_METRICS:
            stat = summary.metrics[name]
            run.metrics.append(RunMetric(metric=name, unit=unit, mean=stat.mean,
                                         std=stat.std, ci95=stat.ci95_halfwidth))
        db.add(run)
        db.commit()
        db.refresh(run)

        logger.info("Run %d stored (%s, %d replications)", run.id, run.label, run.replications)
        return run

    def get_run(self, db: Session, run_id: int) -> SimulationRun:
        run = db.query(SimulationRun).filter(SimulationRun.id == run_id).first()
        if not run:
            raise RunNotFound(f"Run {run_id} not found")
        return run

    def summary_of(self, run: SimulationRun) -> SummaryReport:
        return SummaryReport.model_validate(run.get_summary())

    def model_of(self, run: SimulationRun) -> LineModel:
        return LineModel.model_validate(run.get_model())

    def to_response(self, run: SimulationRun) -> RunResponse:
        return RunResponse(
            id=run.id,
            label=run.label,
            seed=int(run.seed),
            replications=run.replications,
            horizon=run.horizon,
            model_fingerprint=run.model_fingerprint,
            created_at=run.created_at,
            metrics=[MetricRow.model_validate(m) for m in run.metrics],
            summary=self.summary_of(run),
        )

    def bottleneck(self, db: Session, run_id: int) -> BottleneckRanking:
        run = self.get_run(db, run_id)
        return detect_bottleneck(self.summary_of(run), self.model_of(run))

    def compare(self, db: Session, base_id: int, alt_id: int) -> DiffReport:
        base = self.get_run(db, base_id)
        alt = self.get_run(db, alt_id)
        return compare_scenarios(self.summary_of(base), self.summary_of(alt),
                                 base_label=base.label, alt_label=alt.label)


run_service_obj = RunService()
