import os
import tempfile
from typing import Dict, Optional, Sequence, Tuple

import pytest
from fastapi.testclient import TestClient
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from typer.testing import CliRunner

from app.api.deps import get_db
from app.core.database import Base
from app.models import metric, run  # noqa: F401
from app.schemas.line import (
    Branch, ConstantDist, CostRate, LineModel, PoolKind, PoolSpec, RouteSpec,
    SourceSpec, StationSpec, ZERO,
)
from app.schemas.report import (
    REPORT_METRICS, CostBreakdown, MetricSummary, PoolStats, PoolSummary,
    QueueStats, QueueSummary, ReplicationResult, SummaryReport,
)
from app.services.line_service import build_paper_line
from main import app


def tandem_line(services: Sequence, machines: Sequence[int] = None, operators: Sequence[int] = None,
                transports: Sequence = None, interarrival=None, batch_size: int = 1,
                horizon: float = 8.0, **extra) -> LineModel:
    """Source -> S1 -> ... -> Sn -> Sink with one machine pool (m_Si) and one operator pool (o_Si) per station."""
    n = len(services)
    machines = machines or [1] * n
    operators = operators or [0] * n
    transports = transports or [ZERO] * n
    names = [f"S{i + 1}" for i in range(n)]
    pools, stations = [], []
    for name, service, m, o in zip(names, services, machines, operators):
        pools.append(PoolSpec(id=f"m_{name}", kind=PoolKind.MACHINE, capacity=m))
        if o:
            pools.append(PoolSpec(id=f"o_{name}", kind=PoolKind.OPERATOR, capacity=o))
        stations.append(StationSpec(
            id=name, machine_pool=f"m_{name}",
            operator_pool=f"o_{name}" if o else None,
            operators_required=1 if o else 0,
            service=service,
        ))
    nodes = ["Source"] + names + ["Sink"]
    routes = [RouteSpec(from_node="Source", branches=(Branch(to=names[0]),))]
    for (a, b), transport in zip(zip(names, nodes[2:]), transports):
        routes.append(RouteSpec(from_node=a, branches=(Branch(to=b, transport_time=transport),)))
    fields = dict(
        stations=tuple(stations),
        pools=tuple(pools),
        routes=tuple(routes),
        source=SourceSpec(interarrival=interarrival or ConstantDist(value=1000.0), batch_size=batch_size),
        horizon_hours=horizon,
        cost_rates={p.id: CostRate(busy_rate=2.0, idle_rate=1.0) for p in pools},
    )
    fields.update(extra)
    return LineModel(**fields)


def summary_report(metrics: Dict[str, float] = None,
                   pools: Dict[str, Tuple[PoolKind, int, float]] = None,
                   queues: Dict[str, float] = None) -> SummaryReport:
    """A SummaryReport with the given means and zero spread."""
    def stat(value: Optional[float]) -> MetricSummary:
        return MetricSummary(mean=value, std=0.0, ci95_halfwidth=0.0)

    metrics = metrics or {}
    return SummaryReport(
        replications=50,
        horizon=8.0,
        model_fingerprint="test",
        metrics={name: stat(metrics.get(name, 1.0)) for name, _, _ in REPORT_METRICS},
        queues={q: QueueSummary(average_length=stat(0.0), mean_wait=stat(w), max_wait=stat(w))
                for q, w in (queues or {}).items()},
        pools={p: PoolSummary(kind=k, capacity=c, busy_hours=stat(u * c * 8), idle_hours=stat((1 - u) * c * 8),
                              utilization=stat(u))
               for p, (k, c, u) in (pools or {}).items()},
        mean_flow_time=stat(1.0),
        wip_at_horizon=stat(0.0),
    )


def replication_result(outputs: int = 10, total_cost: float = 100.0, replication: int = 0,
                       fingerprint: str = "fp", horizon: float = 8.0) -> ReplicationResult:
    return ReplicationResult(
        replication=replication,
        seed=1,
        horizon=horizon,
        model_fingerprint=fingerprint,
        outputs=outputs,
        created=outputs,
        wip_at_horizon=0,
        events=0,
        mean_flow_time=1.0,
        average_number_in_queue=0.0,
        average_waiting_time_in_queue=0.0,
        average_resource_utilization=0.5,
        queues={"S1": QueueStats(average_length=0.0, mean_wait=0.0, max_wait=0.0, entries=outputs)},
        pools={"m_S1": PoolStats(kind=PoolKind.MACHINE, capacity=1, busy_hours=4.0, idle_hours=4.0,
                                 utilization=0.5, busy_va_hours=4.0, busy_nva_hours=0.0)},
        cost=CostBreakdown(value_added=total_cost / 2, non_value_added=0.0, busy=total_cost / 2,
                           idle=total_cost / 2, total=total_cost),
    )


@pytest.fixture(scope="session")
def paper_line():
    return build_paper_line()


@pytest.fixture
def make_line():
    return tandem_line


@pytest.fixture
def make_summary():
    return summary_report


@pytest.fixture
def make_result():
    return replication_result


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture(scope="session")
def test_db():
    db_fd, db_path = tempfile.mkstemp(suffix=".db")
    engine = create_engine(f"sqlite:///{db_path}", connect_args={"check_same_thread": False})
    TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    Base.metadata.create_all(bind=engine)
    yield TestingSessionLocal
    engine.dispose()
    os.close(db_fd)
    os.unlink(db_path)


@pytest.fixture
def db_session(test_db):
    session = test_db()
    try:
        yield session
    finally:
        session.rollback()
        session.close()


@pytest.fixture
def client(db_session):
    def override_get_db():
        try:
            yield db_session
        finally:
            pass

    app.dependency_overrides[get_db] = override_get_db
    with TestClient(app) as c:
        yield c
    app.dependency_overrides.clear()
