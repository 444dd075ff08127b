import json

import pytest

from app.core.exceptions import ParseError, SchemaError, UnknownTargetError
from app.schemas.line import ConstantDist, TriangularDist
from app.services.line_service import (
    apply_parameters, build_paper_line, get_parameter, load_config, load_fixture,
    model_fingerprint, parse_config, serialize,
)


def minimal_config(**overrides) -> dict:
    config = {
        "name": "mini",
        "pools": [
            {"id": "mixers", "kind": "machine", "capacity": 1},
            {"id": "crew", "kind": "operator", "capacity": 2},
        ],
        "stations": [
            {"id": "mixer", "machine_pool": "mixers", "operator_pool": "crew",
             "operators_required": 1, "service": {"family": "constant", "value": 0.5}},
        ],
        "routes": [
            {"from": "Source", "branches": [{"to": "mixer"}]},
            {"from": "mixer", "branches": [{"to": "Sink"}]},
        ],
        "source": {"interarrival": {"family": "exponential", "mean": 1.0}},
    }
    config.update(overrides)
    return config


def dumps(config: dict) -> str:
    return json.dumps(config)


class TestParseConfig:

    def test_minimal_config(self):
        model = parse_config(dumps(minimal_config()))
        assert model.name == "mini"
        assert model.station("mixer").operators_required == 1
        assert model.route_from("mixer").branches[0].to == "Sink"
        assert model.horizon_hours == 8.0

    def test_headcount_defaults_to_operator_capacity(self):
        assert parse_config(dumps(minimal_config())).headcount == 2

    def test_headcount_mismatch(self):
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(minimal_config(headcount=5)))
        assert any(v.startswith("headcount") for v in exc.value.violations)

    def test_unknown_destination(self):
        config = minimal_config(routes=[
            {"from": "Source", "branches": [{"to": "mixr"}]},
            {"from": "mixer", "branches": [{"to": "Sink"}]},
        ])
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(config))
        assert "routes.Source.mixr: unknown destination" in exc.value.violations

    def test_unknown_key(self):
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(minimal_config(colour="blue")))
        assert any("colour" in v for v in exc.value.violations)

    def test_branch_probabilities_must_sum_to_one(self):
        config = minimal_config(
            stations=[
                {"id": "mixer", "machine_pool": "mixers", "service": {"family": "constant", "value": 0.5}},
                {"id": "alt", "machine_pool": "mixers", "service": {"family": "constant", "value": 0.5}},
            ],
            routes=[
                {"from": "Source", "branches": [{"to": "mixer", "probability": 0.6},
                                                {"to": "alt", "probability": 0.3}]},
                {"from": "mixer", "branches": [{"to": "Sink"}]},
                {"from": "alt", "branches": [{"to": "Sink"}]},
            ],
        )
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(config))
        assert any("branch probabilities sum to" in v for v in exc.value.violations)

    def test_certain_qc_failure_is_rejected(self):
        config = minimal_config(qc={"station": "mixer", "fail_probability": 1.0, "rework_target": "mixer"})
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(config))
        assert "qc.fail_probability: must be < 1" in exc.value.violations

    def test_every_violation_is_reported(self):
        config = minimal_config(horizon_hours=0, pools=[{"id": "mixers", "kind": "machine", "capacity": 0}])
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(config))
        assert len(exc.value.violations) >= 3

    def test_route_cycle(self):
        config = minimal_config(
            stations=[
                {"id": "a", "machine_pool": "mixers", "service": {"family": "constant", "value": 0.5}},
                {"id": "b", "machine_pool": "mixers", "service": {"family": "constant", "value": 0.5}},
            ],
            routes=[
                {"from": "Source", "branches": [{"to": "a"}]},
                {"from": "a", "branches": [{"to": "b"}]},
                {"from": "b", "branches": [{"to": "a", "probability": 0.5}, {"to": "Sink", "probability": 0.5}]},
            ],
        )
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(config))
        assert "routes: route graph contains a cycle" in exc.value.violations

    def test_invalid_distribution(self):
        config = minimal_config(stations=[
            {"id": "mixer", "machine_pool": "mixers",
             "service": {"family": "triangular", "lo": 0.4, "mode": 0.2, "hi": 0.5}},
        ])
        with pytest.raises(SchemaError) as exc:
            parse_config(dumps(config))
        assert any(v.startswith("stations.mixer.service") for v in exc.value.violations)

    def test_malformed_json_reports_position(self):
        with pytest.raises(ParseError) as exc:
            parse_config('{\n  "name": "mini",\n  "pools": [,]\n}')
        assert exc.value.line == 3

    def test_top_level_must_be_an_object(self):
        with pytest.raises(ParseError):
            parse_config("[1, 2]")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(tmp_path / "nope.json")


class TestParameters:

    def test_parameters_block_is_applied(self):
        config = minimal_config(parameters={
            "stations.mixer.service": {"family": "triangular", "lo": 0.3, "mode": 0.4, "hi": 0.5},
            "source.batch_size": 10,
        })
        model = parse_config(dumps(config))
        assert model.station("mixer").service == TriangularDist(lo=0.3, mode=0.4, hi=0.5)
        assert model.source.batch_size == 10

    def test_center_shifts_and_keeps_the_spread(self, paper_line):
        moved = apply_parameters(paper_line, {"stations.ColorProduction.service.center": 0.34})
        service = moved.station("ColorProduction").service
        assert service.mode == pytest.approx(0.34)
        assert service.hi - service.lo == pytest.approx(0.10)
        assert get_parameter(moved, "stations.ColorProduction.service.center") == pytest.approx(0.34)

    def test_center_of_a_constant(self):
        model = parse_config(dumps(minimal_config(parameters={"stations.mixer.service.center": 0.75})))
        assert model.station("mixer").service == ConstantDist(value=0.75)

    def test_unknown_path_in_parameters_block(self):
        with pytest.raises(SchemaError):
            parse_config(dumps(minimal_config(parameters={"stations.nope.service.center": 1.0})))

    def test_unknown_path(self, paper_line):
        with pytest.raises(UnknownTargetError):
            get_parameter(paper_line, "stations.ColorProduction.service.shape")
        with pytest.raises(UnknownTargetError):
            apply_parameters(paper_line, {"routes.Weighing.Sink.transport.center": 0.1})

    def test_transport_and_qc_paths(self, paper_line):
        model = apply_parameters(paper_line, {
            "routes.SolventMixer.QcLab.transport.hi": 0.4,
            "qc.fail_probability": 0.2,
        })
        assert get_parameter(model, "routes.SolventMixer.QcLab.transport.hi") == 0.4
        assert get_parameter(model, "qc.fail_probability") == 0.2


class TestSerialization:

    def test_round_trip(self, paper_line):
        assert parse_config(serialize(paper_line)) == paper_line

    def test_serialization_is_canonical(self, paper_line):
        assert serialize(paper_line) == serialize(parse_config(serialize(paper_line)))
        assert serialize(paper_line).endswith("}\n")

    def test_fingerprint_tracks_content(self, paper_line):
        changed = apply_parameters(paper_line, {"source.batch_size": 100})
        assert model_fingerprint(paper_line) == model_fingerprint(build_paper_line())
        assert model_fingerprint(changed) != model_fingerprint(paper_line)


class TestColorLine:

    def test_fixture_file_matches_the_built_in_line(self, paper_line):
        assert load_fixture() == paper_line

    def test_two_color_production_machines(self, paper_line):
        assert paper_line.machine_count("ColorProduction") == 2

    def test_qc_reworks_into_the_solvent_mixer(self, paper_line):
        assert paper_line.qc.station == "QcLab"
        assert paper_line.qc.rework_target == "SolventMixer"

    def test_headcount_is_the_operator_total(self, paper_line):
        assert paper_line.headcount == paper_line.operator_capacity() == 21

    def test_packaging_split(self, paper_line):
        route = paper_line.route_from("Weighing")
        assert [b.to for b in route.branches] == ["PackagingMachine", "PackagingManualA", "PackagingManualB"]
        assert sum(b.probability for b in route.branches) == pytest.approx(1.0)
