from pathlib import Path

from pydantic_settings import BaseSettings
import os

BASE_DIR = Path(__file__).resolve().parents[2]


class Settings(BaseSettings):
    DATABASE_URL: str = os.getenv(
        "DATABASE_URL",
        "sqlite:///./lineflow.db"
    )
    DEBUG: bool = os.getenv("DEBUG", "False") == "True"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Run protocol: one 8 hour shift, 50 replications
    DEFAULT_REPLICATIONS: int = 50
    DEFAULT_HORIZON_HOURS: float = 8.0
    DEFAULT_SEED: int = 1
    MAX_EVENTS: int = 10_000_000
    WORKERS: int = 1

    FIXTURE_PATH: str = str(BASE_DIR / "fixtures" / "paper_line.json")

    OPTIMIZER_EXHAUSTIVE_LIMIT: int = 10_000
    CALIBRATION_STARTS: int = 3
    CALIBRATION_REPLICATIONS: int = 50

    class Config:
        env_file = ".env"


settings = Settings()
