import pytest

from app.models.metric import RunMetric
from app.models.run import SimulationRun
from app.schemas.line import ConstantDist, ExponentialDist
from tests.conftest import tandem_line


@pytest.fixture(autouse=True)
def db_cleanup(db_session):
    for model in [RunMetric, SimulationRun]:
        db_session.query(model).delete()
    db_session.commit()


@pytest.fixture
def line_payload():
    line = tandem_line([ConstantDist(value=0.3), ConstantDist(value=0.45)],
                       interarrival=ExponentialDist(mean=0.5))
    return line.model_dump(mode="json", by_alias=True)


def create_run(client, payload, **fields):
    body = {"model": payload, "replications": 3, "seed": 1, **fields}
    return client.post("api/v1/runs", json=body)


class TestRunAPI:

    def test_create_run(self, client, line_payload):
        response = create_run(client, line_payload, label="current")
        assert response.status_code == 201
        data = response.json()
        assert data["label"] == "current"
        assert data["replications"] == 3
        assert data["horizon"] == 8.0
        assert [m["metric"] for m in data["metrics"]][0] == "average_outputs"
        assert "S1" in data["summary"]["queues"]

    def test_get_run(self, client, line_payload):
        run = create_run(client, line_payload).json()
        response = client.get(f"api/v1/runs/{run['id']}")
        assert response.status_code == 200
        assert response.json()["summary"] == run["summary"]

    def test_run_not_found(self, client):
        response = client.get("api/v1/runs/9999")
        assert response.status_code == 404
        assert response.json()["error_code"] == "HTTP_404"

    def test_interventions_are_applied(self, client, line_payload):
        run = create_run(client, line_payload, interventions=[
            {"variant": "add_parallel_machine", "station": "S2", "machines": 1},
        ]).json()
        assert run["summary"]["pools"]["m_S2"]["capacity"] == 2

    def test_full_width_seed_is_stored(self, client, line_payload):
        seed = 2**64 - 1
        response = create_run(client, line_payload, seed=seed, replications=1)
        assert response.status_code == 201
        run = response.json()
        assert run["seed"] == seed
        assert client.get(f"api/v1/runs/{run['id']}").json()["seed"] == seed

    def test_seed_wider_than_64_bits(self, client, line_payload):
        response = create_run(client, line_payload, seed=2**64)
        assert response.status_code == 422
        assert response.json()["error_code"] == "VALIDATION_ERROR"

    def test_horizon_override(self, client, line_payload):
        run = create_run(client, line_payload, horizon=4.0).json()
        assert run["horizon"] == 4.0

    def test_invalid_model(self, client, line_payload):
        line_payload["pools"] = []
        line_payload["cost_rates"] = {}
        response = create_run(client, line_payload)
        assert response.status_code == 422
        data = response.json()
        assert data["error_code"] == "INVALID_MODEL"
        assert any("machine_pool" in v for v in data["violations"])

    def test_unknown_intervention_target(self, client, line_payload):
        response = create_run(client, line_payload, interventions=[
            {"variant": "overlap_with_transport", "station": "Kiln"},
        ])
        assert response.status_code == 400
        assert response.json()["error_code"] == "SCENARIO_ERROR"

    def test_request_validation(self, client, line_payload):
        response = create_run(client, line_payload, replications=0)
        assert response.status_code == 422
        assert response.json()["error_code"] == "VALIDATION_ERROR"


class TestAnalysisAPI:

    def test_bottleneck(self, client, line_payload):
        run = create_run(client, line_payload).json()
        response = client.get(f"api/v1/runs/{run['id']}/bottleneck")
        assert response.status_code == 200
        entries = response.json()["entries"]
        assert entries[0]["station"] == "S2"
        assert entries[0]["rank"] == 1

    def test_compare(self, client, line_payload):
        base = create_run(client, line_payload, label="current").json()
        alt = create_run(client, line_payload, label="developed", interventions=[
            {"variant": "overlap_with_transport", "station": "S1"},
        ]).json()
        response = client.post("api/v1/compare", json={"base_run_id": base["id"], "alt_run_id": alt["id"]})
        assert response.status_code == 200
        data = response.json()
        assert [row["scenario"] for row in data["unit_cost"]] == ["current", "developed"]
        assert data["metrics"][0]["metric"] == "average_outputs"

    def test_compare_missing_run(self, client, line_payload):
        base = create_run(client, line_payload).json()
        response = client.post("api/v1/compare", json={"base_run_id": base["id"], "alt_run_id": 9999})
        assert response.status_code == 404
        assert response.json()["error_code"] == "RUN_NOT_FOUND"

    def test_paper_line_fixture(self, client):
        response = client.get("api/v1/fixtures/paper-line")
        assert response.status_code == 200
        data = response.json()
        assert data["name"] == "color-line"
        assert len(data["stations"]) == 9
