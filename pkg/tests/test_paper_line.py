"""Acceptance checks on the calibrated color line (50 replications of one 8 h shift)."""
import pytest

from app.schemas.scenario import MoveOperators, Objective
from app.services.analysis_service import compare_scenarios, detect_bottleneck, profile_around
from app.services.optimizer_service import optimizer_service
from app.services.replication_service import replication_service
from app.services.scenario_service import scenario_service

pytestmark = pytest.mark.slow

REPLICATIONS = 50
SEED = 1
PACKAGING = "packaging_operators"


@pytest.fixture(scope="module")
def current(paper_line):
    return replication_service.simulate(paper_line, REPLICATIONS, SEED)


@pytest.fixture(scope="module")
def developed_scenario(paper_line):
    return scenario_service.build_developed_scenario(paper_line, replications=REPLICATIONS, seed=SEED)


@pytest.fixture(scope="module")
def developed_model(developed_scenario):
    return scenario_service.apply_scenario(developed_scenario)


@pytest.fixture(scope="module")
def developed(developed_model):
    return replication_service.simulate(developed_model, REPLICATIONS, SEED)


def mean(summary, metric):
    return summary.metrics[metric].mean


def wait_range(summary):
    waits = [q.mean_wait.mean for q in summary.queues.values()]
    return max(waits) - min(waits)


class TestCurrentLine:

    def test_outputs(self, current):
        assert mean(current, "average_outputs") == pytest.approx(38.0, abs=2.0)

    def test_number_in_queue(self, current):
        assert mean(current, "average_number_in_queue") == pytest.approx(82.7, abs=8.0)

    def test_waiting_time(self, current):
        assert mean(current, "average_waiting_time_in_queue") == pytest.approx(6.07, abs=0.5)

    def test_utilization(self, current):
        assert mean(current, "average_resource_utilization") == pytest.approx(0.603, abs=0.03)

    def test_cost_closure(self, current):
        busy = mean(current, "busy_cost")
        assert mean(current, "value_added_cost") + mean(current, "non_value_added_cost") == pytest.approx(busy)
        assert busy + mean(current, "idle_cost") == pytest.approx(mean(current, "total_cost"))

    def test_reproducible(self, paper_line, current):
        assert replication_service.simulate(paper_line, REPLICATIONS, SEED) == current


class TestBottleneck:

    def test_color_production_limits_the_line(self, paper_line, current):
        assert detect_bottleneck(current, paper_line).bottleneck == "ColorProduction"

    def test_profile_is_consistent(self, paper_line, current):
        verdict = profile_around(current, paper_line, "ColorProduction")
        assert verdict.verdict
        assert verdict.upstream_mean > verdict.downstream_mean


class TestDevelopedLine:

    def test_more_outputs(self, current, developed):
        diff = compare_scenarios(current, developed)
        assert diff.metric("average_outputs").percent_delta >= 25.0

    def test_cheaper_units(self, current, developed):
        diff = compare_scenarios(current, developed)
        assert diff.metric("cost_per_unit").percent_delta <= -15.0

    def test_busier_resources(self, current, developed):
        gain = mean(developed, "average_resource_utilization") - mean(current, "average_resource_utilization")
        assert gain >= 0.05

    def test_shorter_queues(self, current, developed):
        assert mean(developed, "average_number_in_queue") < mean(current, "average_number_in_queue")
        assert mean(developed, "average_waiting_time_in_queue") < mean(current, "average_waiting_time_in_queue")

    def test_waits_are_more_even(self, current, developed):
        assert wait_range(developed) < wait_range(current)

    def test_headcount_is_unchanged(self, paper_line, developed_model):
        assert developed_model.operator_capacity() == paper_line.operator_capacity()

    def test_cost_search_moves_packaging_operators(self, paper_line, developed_scenario, developed_model):
        moves = [iv for iv in developed_scenario.interventions if isinstance(iv, MoveOperators)]
        assert len(moves) == 1
        assert moves[0].count >= 1
        assert developed_model.pool(PACKAGING).capacity < paper_line.pool(PACKAGING).capacity - 1


class TestPackagingStaff:

    def test_baseline_packaging_staff_is_mostly_idle(self, current):
        assert 0.08 <= current.pools[PACKAGING].utilization.mean <= 0.25

    def test_cost_search_frees_packaging_operators(self, paper_line, current):
        baseline = current.pools[PACKAGING].utilization.mean
        result = optimizer_service.optimize_operators(
            paper_line, total=paper_line.pool(PACKAGING).capacity,
            objective=Objective.MIN_COST_PER_UNIT, replications=20, seed=SEED, pools=[PACKAGING],
        )
        kept = result.allocation[PACKAGING]
        assert kept < paper_line.pool(PACKAGING).capacity
        assert result.summary.pools[PACKAGING].utilization.mean >= 3 * baseline
