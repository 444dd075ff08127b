from sqlalchemy import Column, Float, ForeignKey, Integer, String, UniqueConstraint
from sqlalchemy.orm import relationship

from app.core.database import Base


class RunMetric(Base):
    __tablename__ = "run_metrics"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("simulation_runs.id"), nullable=False, index=True)
    metric = Column(String(64), nullable=False)
    unit = Column(String(16), nullable=False)
    mean = Column(Float)
    std = Column(Float)
    ci95 = Column(Float)

    run = relationship("SimulationRun", back_populates="metrics")

    __table_args__ = (
        UniqueConstraint("run_id", "metric", name="unique_run_metric"),
    )
