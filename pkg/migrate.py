"""
Database migration script to set up the run store schema.
"""
import os

from dotenv import load_dotenv
from sqlalchemy import create_engine, text

# Load environment variables
load_dotenv()

DATABASE_URL = os.getenv(
    "DATABASE_URL",
    "sqlite:///./lineflow.db"
)


def run_migrations():
    """Create the simulation run tables."""
    engine = create_engine(DATABASE_URL)

    with engine.connect() as conn:
        conn.execute(text("""
            CREATE TABLE IF NOT EXISTS simulation_runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                label VARCHAR(100) NOT NULL DEFAULT 'run',
                seed VARCHAR(20) NOT NULL,
                replications INTEGER NOT NULL,
                horizon FLOAT NOT NULL,
                model_fingerprint VARCHAR(64) NOT NULL,
                model_json TEXT NOT NULL,
                summary_json TEXT NOT NULL,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """))

        conn.execute(text("""
            CREATE TABLE IF NOT EXISTS run_metrics (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL REFERENCES simulation_runs(id) ON DELETE CASCADE,
                metric VARCHAR(64) NOT NULL,
                unit VARCHAR(16) NOT NULL,
                mean FLOAT,
                std FLOAT,
                ci95 FLOAT,
                UNIQUE (run_id, metric)
            )
        """))

        # SQLite-compatible index creation
        for index_name, sql in [
            ("ix_simulation_runs_model_fingerprint",
             "CREATE INDEX ix_simulation_runs_model_fingerprint ON simulation_runs (model_fingerprint);"),
            ("ix_run_metrics_run_id", "CREATE INDEX ix_run_metrics_run_id ON run_metrics (run_id);"),
        ]:
            result = conn.execute(
                text("SELECT name FROM sqlite_master WHERE type='index' AND name=:name"),
                {"name": index_name}
            )
            if not result.fetchone():
                conn.execute(text(sql))

        conn.commit()

    print("Database migrations completed successfully.")


if __name__ == "__main__":
    print("Starting database migration...")

    run_migrations()

    print("Migration complete!")
