import json

from sqlalchemy import Column, DateTime, Float, Integer, String, Text
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

from app.core.database import Base


class SimulationRun(Base):
    __tablename__ = "simulation_runs"

    id = Column(Integer, primary_key=True, index=True)
    label = Column(String(100), nullable=False, default="run")
    # decimal text: unsigned 64-bit seeds overflow INTEGER columns
    seed = Column(String(20), nullable=False)
    replications = Column(Integer, nullable=False)
    horizon = Column(Float, nullable=False)
    model_fingerprint = Column(String(64), nullable=False, index=True)
    model_json = Column(Text, nullable=False)
    summary_json = Column(Text, nullable=False)
    created_at = Column(DateTime(timezone=True), server_default=func.now())

    metrics = relationship("RunMetric", back_populates="run", cascade="all, delete-orphan",
                           order_by="RunMetric.id")

    def get_model(self):
        return json.loads(self.model_json)

    def set_model(self, model_obj):
        self.model_json = json.dumps(model_obj, sort_keys=True)

    def get_summary(self):
        return json.loads(self.summary_json)

    def set_summary(self, summary_obj):
        self.summary_json = json.dumps(summary_obj, sort_keys=True)
