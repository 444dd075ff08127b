import json

import pytest

from app.core.exceptions import HeadcountViolationError, SchemaError, UnknownTargetError
from app.schemas.line import UniformDist
from app.schemas.scenario import (
    AddParallelMachine, MoveOperators, OverlapWithTransport, Scenario, SetOperatorCount,
    SetTransportTime,
)
from app.core.config import BASE_DIR
from app.services.scenario_service import (
    dump_interventions, load_scenario_file, parse_interventions, scenario_service,
)


class TestInterventions:

    def test_add_machine_staffed_from_packaging(self, paper_line):
        iv = AddParallelMachine(station="ColorProduction", machines=1, operators=1,
                                operators_from="packaging_operators")
        model = scenario_service.apply_intervention(paper_line, iv)
        assert model.machine_count("ColorProduction") == 3
        assert model.pool("color_operators").capacity == 3
        assert model.pool("packaging_operators").capacity == 4
        assert model.headcount == paper_line.headcount

    def test_input_model_is_untouched(self, paper_line):
        before = paper_line.model_dump()
        scenario_service.apply_intervention(paper_line, AddParallelMachine(station="ColorProduction"))
        assert paper_line.model_dump() == before

    def test_unstaffed_operator_increase_is_rejected(self, paper_line):
        with pytest.raises(HeadcountViolationError):
            scenario_service.apply_intervention(
                paper_line, AddParallelMachine(station="ColorProduction", operators=1))

    def test_declared_headcount_increase(self, paper_line):
        model = scenario_service.apply_intervention(
            paper_line, AddParallelMachine(station="ColorProduction", operators=1, increase_headcount=True))
        assert model.headcount == paper_line.headcount + 1

    def test_move_operators(self, paper_line):
        iv = MoveOperators(from_pool="packaging_operators", to_pool="color_operators", count=2)
        model = scenario_service.apply_intervention(paper_line, iv)
        assert model.pool("packaging_operators").capacity == 3
        assert model.pool("color_operators").capacity == 4
        assert model.operator_capacity() == paper_line.operator_capacity()

    def test_cannot_move_more_than_the_pool_has(self, paper_line):
        with pytest.raises(HeadcountViolationError):
            scenario_service.apply_intervention(
                paper_line, MoveOperators(from_pool="lab_technicians", to_pool="color_operators", count=2))

    def test_moving_below_station_needs_is_invalid(self, paper_line):
        with pytest.raises(SchemaError):
            scenario_service.apply_intervention(
                paper_line, MoveOperators(from_pool="lab_technicians", to_pool="color_operators", count=1))

    def test_operators_only_move_between_operator_pools(self, paper_line):
        with pytest.raises(UnknownTargetError):
            scenario_service.apply_intervention(
                paper_line, MoveOperators(from_pool="permil_machines", to_pool="color_operators", count=1))

    def test_unknown_station(self, paper_line):
        with pytest.raises(UnknownTargetError):
            scenario_service.apply_intervention(paper_line, OverlapWithTransport(station="Kiln"))

    def test_overlap(self, paper_line):
        model = scenario_service.apply_intervention(paper_line, OverlapWithTransport(station="PasteMixer"))
        assert model.station("PasteMixer").overlap_with_outbound_transport

    def test_qc_station_cannot_overlap(self, paper_line):
        with pytest.raises(SchemaError):
            scenario_service.apply_intervention(paper_line, OverlapWithTransport(station="QcLab"))

    def test_set_transport_time(self, paper_line):
        leg = UniformDist(lo=0.1, hi=0.2)
        model = scenario_service.apply_intervention(
            paper_line, SetTransportTime(from_node="SolventMixer", to="QcLab", transport_time=leg))
        assert model.route_from("SolventMixer").branches[0].transport_time == leg

    def test_set_rework_transport_time(self, paper_line):
        leg = UniformDist(lo=0.1, hi=0.2)
        model = scenario_service.apply_intervention(
            paper_line, SetTransportTime(from_node="QcLab", to="SolventMixer", transport_time=leg))
        assert model.qc.rework_transport == leg

    def test_unknown_transport_leg(self, paper_line):
        with pytest.raises(UnknownTargetError):
            scenario_service.apply_intervention(
                paper_line, SetTransportTime(from_node="ResinAddition", to="Sink",
                                             transport_time=UniformDist(lo=0.1, hi=0.2)))

    def test_set_operator_count_needs_declared_headcount_change(self, paper_line):
        with pytest.raises(HeadcountViolationError):
            scenario_service.apply_intervention(paper_line, SetOperatorCount(pool="paste_operators", count=4))
        model = scenario_service.apply_intervention(
            paper_line, SetOperatorCount(pool="paste_operators", count=4, adjust_headcount=True))
        assert model.pool("paste_operators").capacity == 4
        assert model.headcount == paper_line.headcount - 2

    def test_set_operator_count_to_the_current_value(self, paper_line):
        model = scenario_service.apply_intervention(paper_line, SetOperatorCount(pool="paste_operators", count=6))
        assert model == paper_line


class TestScenarios:

    def test_empty_scenario_is_the_base(self, paper_line):
        assert scenario_service.apply_scenario(Scenario(base=paper_line)) == paper_line

    def test_developed_scenario(self, paper_line):
        scenario = scenario_service.build_developed_scenario(paper_line, moved_operators=2)
        model = scenario_service.apply_scenario(scenario)
        assert scenario.label == "developed"
        assert model.machine_count("ColorProduction") == 3
        assert model.pool("color_operators").capacity == 5
        assert model.pool("packaging_operators").capacity == 2
        assert model.station("PasteMixer").overlap_with_outbound_transport
        assert model.station("SolventMixer").overlap_with_outbound_transport
        assert model.operator_capacity() == paper_line.headcount

    def test_developed_scenario_without_moves(self, paper_line):
        scenario = scenario_service.build_developed_scenario(paper_line, moved_operators=0)
        assert not any(isinstance(iv, MoveOperators) for iv in scenario.interventions)

    def test_fixture_file_matches_the_developed_scenario(self, paper_line):
        scenario = scenario_service.build_developed_scenario(paper_line, moved_operators=2)
        assert tuple(load_scenario_file(BASE_DIR / "fixtures" / "developed_scenario.json")) == scenario.interventions


class TestScenarioFiles:

    def test_wrapped_list(self):
        text = json.dumps({"interventions": [{"variant": "overlap_with_transport", "station": "PasteMixer"}]})
        assert parse_interventions(text) == [OverlapWithTransport(station="PasteMixer")]

    def test_aliases(self):
        text = json.dumps([{"variant": "move_operators", "from": "a", "to": "b", "count": 1}])
        assert parse_interventions(text)[0].from_pool == "a"

    def test_unknown_variant(self):
        with pytest.raises(SchemaError):
            parse_interventions(json.dumps([{"variant": "hire_more_people"}]))

    def test_dump_and_parse(self):
        interventions = [
            AddParallelMachine(station="ColorProduction", operators=1, operators_from="packaging_operators"),
            MoveOperators(from_pool="packaging_operators", to_pool="color_operators", count=2),
        ]
        assert parse_interventions(dump_interventions(interventions)) == interventions
