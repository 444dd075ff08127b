import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from pydantic import TypeAdapter, ValidationError

from app.core.exceptions import (
    HeadcountViolationError, ParseError, SchemaError, UnknownTargetError,
)
from app.schemas.line import LineModel, PoolKind
from app.schemas.scenario import (
    AddParallelMachine, Intervention, MoveOperators, Objective,
    OverlapWithTransport, Scenario, SetOperatorCount, SetTransportTime,
)
from app.services.validators import LineValidator

logger = logging.getLogger(__name__)

_interventions = TypeAdapter(List[Intervention])

COLOR_STATION = "ColorProduction"
PACKAGING_POOL = "packaging_operators"
MIXING_STATIONS = ("PasteMixer", "SolventMixer")


class ScenarioService:
    """Pure model transformations; the input model is never modified."""

    def __init__(self):
        self.validator = LineValidator()

    def apply_intervention(self, model: LineModel, iv: Intervention) -> LineModel:
        data = copy.deepcopy(model.model_dump(mode="json", by_alias=True))
        handler = {
            AddParallelMachine: self._add_parallel_machine,
            MoveOperators: self._move_operators,
            OverlapWithTransport: self._overlap,
            SetTransportTime: self._set_transport_time,
            SetOperatorCount: self._set_operator_count,
        }[type(iv)]
        handler(data, iv)

        try:
            result = LineModel.model_validate(data)
        except ValidationError as e:
            raise SchemaError([f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()])
        violations = self.validator.validate(result)
        if violations:
            raise SchemaError(violations)
        logger.info("Applied %s to '%s'", iv.variant, model.name)
        return result

    def apply_interventions(self, model: LineModel, interventions: Iterable[Intervention]) -> LineModel:
        for iv in interventions:
            model = self.apply_intervention(model, iv)
        return model

    def apply_scenario(self, scenario: Scenario) -> LineModel:
        return self.apply_interventions(scenario.base, scenario.interventions)

    def build_developed_scenario(self, fixture: LineModel, moved_operators: Optional[int] = None,
                                 replications: Optional[int] = None,
                                 seed: Optional[int] = None) -> Scenario:
        """
        Add a permil machine staffed from packaging, move the packaging
        operators the cost search finds surplus to color production, and let
        both mixers overlap their outbound transport.
        """
        color = fixture.station(COLOR_STATION)
        if color is None or not color.operator_pool:
            raise UnknownTargetError(f"Model has no staffed {COLOR_STATION} station")
        color_pool = color.operator_pool
        added = AddParallelMachine(station=COLOR_STATION, machines=1, operators=1,
                                   operators_from=PACKAGING_POOL)
        staffed = self.apply_intervention(fixture, added)
        if moved_operators is None:
            from app.services.optimizer_service import optimizer_service

            available = staffed.pool(PACKAGING_POOL).capacity
            result = optimizer_service.optimize_operators(
                staffed, total=available, objective=Objective.MIN_COST_PER_UNIT,
                replications=replications, seed=seed, pools=[PACKAGING_POOL],
            )
            moved_operators = available - result.allocation[PACKAGING_POOL]
            logger.info("Cost search keeps %d packaging operator(s); moving %d",
                        result.allocation[PACKAGING_POOL], moved_operators)

        interventions = [added]
        if moved_operators > 0:
            interventions.append(MoveOperators(from_pool=PACKAGING_POOL, to_pool=color_pool,
                                               count=moved_operators))
        interventions += [OverlapWithTransport(station=s, enabled=True) for s in MIXING_STATIONS]
        return Scenario(base=fixture, interventions=tuple(interventions), label="developed")

    # handlers work on the by-alias dump of the model

    def _add_parallel_machine(self, data: Dict[str, Any], iv: AddParallelMachine) -> None:
        station = _station(data, iv.station)
        _pool(data, station["machine_pool"])["capacity"] += iv.machines
        if iv.operators == 0:
            return
        if not station["operator_pool"]:
            raise UnknownTargetError(f"Station {iv.station} has no operator pool")
        target = _operator_pool(data, station["operator_pool"])
        if iv.operators_from:
            donor = _operator_pool(data, iv.operators_from)
            if donor["capacity"] < iv.operators:
                raise HeadcountViolationError(
                    f"Pool {donor['id']} has {donor['capacity']} operator(s), cannot give {iv.operators}"
                )
            donor["capacity"] -= iv.operators
        elif iv.increase_headcount:
            if data["headcount"]:
                data["headcount"] += iv.operators
        else:
            raise HeadcountViolationError(
                f"Adding {iv.operators} operator(s) to {iv.station} needs operators_from "
                "or an explicit headcount increase"
            )
        target["capacity"] += iv.operators

    def _move_operators(self, data: Dict[str, Any], iv: MoveOperators) -> None:
        donor = _operator_pool(data, iv.from_pool)
        receiver = _operator_pool(data, iv.to_pool)
        if donor["capacity"] < iv.count:
            raise HeadcountViolationError(
                f"Pool {iv.from_pool} has {donor['capacity']} operator(s), cannot move {iv.count}"
            )
        donor["capacity"] -= iv.count
        receiver["capacity"] += iv.count

    def _overlap(self, data: Dict[str, Any], iv: OverlapWithTransport) -> None:
        _station(data, iv.station)["overlap_with_outbound_transport"] = iv.enabled

    def _set_transport_time(self, data: Dict[str, Any], iv: SetTransportTime) -> None:
        for route in data["routes"]:
            if route["from"] != iv.from_node:
                continue
            for branch in route["branches"]:
                if branch["to"] == iv.to:
                    branch["transport_time"] = iv.transport_time.model_dump(mode="json")
                    return
        if data.get("qc") and data["qc"]["station"] == iv.from_node and data["qc"]["rework_target"] == iv.to:
            data["qc"]["rework_transport"] = iv.transport_time.model_dump(mode="json")
            return
        raise UnknownTargetError(f"No transport leg {iv.from_node} -> {iv.to}")

    def _set_operator_count(self, data: Dict[str, Any], iv: SetOperatorCount) -> None:
        pool = _operator_pool(data, iv.pool)
        delta = iv.count - pool["capacity"]
        if delta and not iv.adjust_headcount:
            raise HeadcountViolationError(
                f"Setting {iv.pool} to {iv.count} changes headcount by {delta:+d}"
            )
        pool["capacity"] = iv.count
        if data["headcount"]:
            data["headcount"] += delta


def _station(data: Dict[str, Any], station_id: str) -> Dict[str, Any]:
    for station in data["stations"]:
        if station["id"] == station_id:
            return station
    raise UnknownTargetError(f"Unknown station {station_id}")


def _pool(data: Dict[str, Any], pool_id: str) -> Dict[str, Any]:
    for pool in data["pools"]:
        if pool["id"] == pool_id:
            return pool
    raise UnknownTargetError(f"Unknown pool {pool_id}")


def _operator_pool(data: Dict[str, Any], pool_id: str) -> Dict[str, Any]:
    pool = _pool(data, pool_id)
    if pool["kind"] != PoolKind.OPERATOR.value:
        raise UnknownTargetError(f"Pool {pool_id} is not an operator pool")
    return pool


def parse_interventions(text: str) -> List[Intervention]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno, column=e.colno)
    if isinstance(data, dict):
        data = data.get("interventions", data)
    try:
        return _interventions.validate_python(data)
    except ValidationError as e:
        raise SchemaError([f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()])


def load_scenario_file(path: Union[str, Path]) -> List[Intervention]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror or e}")
    return parse_interventions(text)


def dump_interventions(interventions: Sequence[Intervention]) -> str:
    return json.dumps(_interventions.dump_python(list(interventions), mode="json", by_alias=True),
                      indent=2) + "\n"


scenario_service = ScenarioService()
