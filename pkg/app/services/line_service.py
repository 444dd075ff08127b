"""
Reading, writing and parameterizing line models, plus the built-in color line.

A config document is UTF-8 JSON. Besides the model fields it may carry a
``parameters`` block mapping dotted paths to numbers or full distribution
objects; the block is applied on load and is not part of the model.

Parameter paths::

    source.interarrival[.<p>]          source.batch_size
    stations.<id>.service[.<p>]        routes.<from>.<to>.transport[.<p>]
    qc.fail_probability                qc.rework_transport[.<p>]

``<p>`` is a family parameter (value, mean, lo, mode, hi) or ``center``,
which moves the distribution's location and keeps its spread.
"""
import copy
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import ParseError, SchemaError, UnknownTargetError
from app.schemas.line import LineModel, PoolKind
from app.services.validators import LineValidator

logger = logging.getLogger(__name__)

ParameterValue = Union[float, int, Dict[str, Any]]


def parse_config(text: str) -> LineModel:
    """Parse and validate a config document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno, column=e.colno)
    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object", line=1, column=1)

    parameters = data.pop("parameters", None) or {}
    if not isinstance(parameters, dict):
        raise SchemaError(["parameters: must be an object"])
    if "headcount" not in data and isinstance(data.get("pools"), list):
        data["headcount"] = sum(
            p.get("capacity", 0) for p in data["pools"]
            if isinstance(p, dict) and p.get("kind") == PoolKind.OPERATOR.value
            and isinstance(p.get("capacity"), int)
        )

    model = _build(data)
    if parameters:
        try:
            model = apply_parameters(model, parameters)
        except UnknownTargetError as e:
            raise SchemaError([f"parameters: {e}"])
    violations = LineValidator().validate(model)
    if violations:
        raise SchemaError(violations)
    return model


def load_config(path: Union[str, Path]) -> LineModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror or e}")
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not valid UTF-8")
    model = parse_config(text)
    logger.info("Loaded line '%s' from %s", model.name, path)
    return model


def serialize(model: LineModel) -> str:
    """Canonical JSON of a model; parse_config(serialize(m)) == m."""
    return json.dumps(model.model_dump(mode="json", by_alias=True), indent=2, sort_keys=True) + "\n"


def model_fingerprint(model: LineModel) -> str:
    return hashlib.sha256(serialize(model).encode("utf-8")).hexdigest()


def validate(model: LineModel) -> List[str]:
    return LineValidator().validate(model)


def _build(data: Mapping[str, Any]) -> LineModel:
    try:
        return LineModel.model_validate(data)
    except ValidationError as e:
        raise SchemaError([_describe(err) for err in e.errors()])


def _describe(error: Mapping[str, Any]) -> str:
    location = ".".join(str(part) for part in error["loc"])
    return f"{location}: {error['msg']}" if location else error["msg"]


# Parameter paths

def _distribution_slot(data: Dict[str, Any], parts: List[str]) -> tuple:
    """Resolve a path to (container, key) of a distribution, plus the rest of the path."""
    head = parts[0] if parts else ""
    if head == "source" and len(parts) >= 2 and parts[1] == "interarrival":
        if data.get("source") is None:
            raise UnknownTargetError("model has no source")
        return data["source"], "interarrival", parts[2:]
    if head == "stations" and len(parts) >= 3 and parts[2] == "service":
        for station in data["stations"]:
            if station["id"] == parts[1]:
                return station, "service", parts[3:]
        raise UnknownTargetError(f"unknown station '{parts[1]}'")
    if head == "routes" and len(parts) >= 4 and parts[3] == "transport":
        for route in data["routes"]:
            if route["from"] != parts[1]:
                continue
            for branch in route["branches"]:
                if branch["to"] == parts[2]:
                    return branch, "transport_time", parts[4:]
        raise UnknownTargetError(f"unknown route {parts[1]} -> {parts[2]}")
    if head == "qc" and len(parts) >= 2 and parts[1] == "rework_transport":
        if data.get("qc") is None:
            raise UnknownTargetError("model has no QC station")
        return data["qc"], "rework_transport", parts[2:]
    raise UnknownTargetError(f"unknown parameter path '{'.'.join(parts)}'")


def _set_location(dist: Dict[str, Any], center: float) -> None:
    family = dist["family"]
    if family == "constant":
        dist["value"] = center
    elif family == "exponential":
        dist["mean"] = center
    elif family == "uniform":
        half = (dist["hi"] - dist["lo"]) / 2.0
        dist["lo"], dist["hi"] = center - half, center + half
    else:
        shift = center - dist["mode"]
        for key in ("lo", "mode", "hi"):
            dist[key] += shift


def _location(dist: Mapping[str, Any]) -> float:
    family = dist["family"]
    if family == "constant":
        return dist["value"]
    if family == "exponential":
        return dist["mean"]
    if family == "uniform":
        return (dist["lo"] + dist["hi"]) / 2.0
    return dist["mode"]


def _set_path(data: Dict[str, Any], path: str, value: ParameterValue) -> None:
    parts = path.split(".")
    if parts == ["source", "batch_size"]:
        if data.get("source") is None:
            raise UnknownTargetError("model has no source")
        data["source"]["batch_size"] = int(value)
        return
    if parts == ["qc", "fail_probability"]:
        if data.get("qc") is None:
            raise UnknownTargetError("model has no QC station")
        data["qc"]["fail_probability"] = float(value)
        return

    container, key, rest = _distribution_slot(data, parts)
    if not rest:
        if not isinstance(value, dict):
            raise UnknownTargetError(f"'{path}' needs a distribution object")
        container[key] = dict(value)
        return
    if len(rest) != 1 or isinstance(value, dict):
        raise UnknownTargetError(f"unknown parameter path '{path}'")
    dist = container[key]
    if rest[0] == "center":
        _set_location(dist, float(value))
    elif rest[0] in dist and rest[0] != "family":
        dist[rest[0]] = float(value)
    else:
        raise UnknownTargetError(f"{dist['family']} has no parameter '{rest[0]}'")


def apply_parameters(model: LineModel, parameters: Mapping[str, ParameterValue]) -> LineModel:
    """Return a copy of ``model`` with every parameter path set, in mapping order."""
    data = copy.deepcopy(model.model_dump(mode="json", by_alias=True))
    for path, value in parameters.items():
        _set_path(data, path, value)
    return _build(data)


def get_parameter(model: LineModel, path: str) -> float:
    """Current numeric value at a parameter path."""
    data = model.model_dump(mode="json", by_alias=True)
    parts = path.split(".")
    if parts == ["source", "batch_size"]:
        if model.source is None:
            raise UnknownTargetError("model has no source")
        return float(model.source.batch_size)
    if parts == ["qc", "fail_probability"]:
        if model.qc is None:
            raise UnknownTargetError("model has no QC station")
        return model.qc.fail_probability
    container, key, rest = _distribution_slot(data, parts)
    if len(rest) != 1:
        raise UnknownTargetError(f"'{path}' does not name a number")
    dist = container[key]
    if rest[0] == "center":
        return float(_location(dist))
    if rest[0] in dist and rest[0] != "family":
        return float(dist[rest[0]])
    raise UnknownTargetError(f"{dist['family']} has no parameter '{rest[0]}'")


# The color line

def _uniform(lo: float, hi: float) -> Dict[str, Any]:
    return {"family": "uniform", "lo": lo, "hi": hi}


def _triangular(lo: float, mode: float, hi: float) -> Dict[str, Any]:
    return {"family": "triangular", "lo": lo, "mode": mode, "hi": hi}


_PLACEHOLDER = {"family": "constant", "value": 0.0}
_PACKAGING = ("PackagingMachine", "PackagingManualA", "PackagingManualB")

# Calibrated distribution parameters, hours. fail_probability and the
# packaging split are calibration degrees of freedom, not observed data.
PAPER_LINE_PARAMETERS: Dict[str, ParameterValue] = {
    "source.interarrival": {"family": "constant", "value": 24.0},
    "source.batch_size": 118,
    "stations.ResinAddition.service": _triangular(0.137, 0.167, 0.197),
    "stations.PasteMixer.service": _triangular(0.30, 0.36, 0.42),
    "stations.ColorProduction.service": _triangular(0.27, 0.32, 0.37),
    "stations.SolventMixer.service": _triangular(0.12, 0.15, 0.18),
    "stations.QcLab.service": _triangular(0.06, 0.08, 0.10),
    "stations.Weighing.service": _triangular(0.06, 0.08, 0.10),
    "stations.PackagingMachine.service": _triangular(0.15, 0.20, 0.25),
    "stations.PackagingManualA.service": _triangular(0.15, 0.18, 0.21),
    "stations.PackagingManualB.service": _triangular(0.15, 0.18, 0.21),
    "routes.ResinAddition.PasteMixer.transport": _uniform(0.03, 0.07),
    "routes.PasteMixer.ColorProduction.transport": _uniform(0.03, 0.07),
    "routes.ColorProduction.SolventMixer.transport": _uniform(0.03, 0.07),
    "routes.SolventMixer.QcLab.transport": _uniform(0.20, 0.30),
    "routes.QcLab.Weighing.transport": _uniform(0.20, 0.30),
    "routes.Weighing.PackagingMachine.transport": _uniform(0.03, 0.07),
    "routes.Weighing.PackagingManualA.transport": _uniform(0.03, 0.07),
    "routes.Weighing.PackagingManualB.transport": _uniform(0.03, 0.07),
    "qc.fail_probability": 0.1,
    "qc.rework_transport": _uniform(0.20, 0.30),
}

MACHINE_RATE = {"busy_rate": 55.0, "idle_rate": 35.0}
OPERATOR_RATE = {"busy_rate": 45.0, "idle_rate": 40.0}


def _station(station_id: str, machine_pool: str, operator_pool: Optional[str],
             operators_required: int = 1, value_class: str = "value_adding") -> Dict[str, Any]:
    return {
        "id": station_id,
        "machine_pool": machine_pool,
        "operator_pool": operator_pool,
        "operators_required": operators_required if operator_pool else 0,
        "service": dict(_PLACEHOLDER),
        "value_class": value_class,
    }


def _link(from_node: str, to: str) -> Dict[str, Any]:
    return {"from": from_node, "branches": [{"to": to, "transport_time": dict(_PLACEHOLDER)}]}


def _paper_line_template() -> Dict[str, Any]:
    pools = [
        ("resin_stations", "machine", 4), ("resin_operators", "operator", 4),
        ("paste_mixers", "machine", 6), ("paste_operators", "operator", 6),
        ("permil_machines", "machine", 2), ("color_operators", "operator", 2),
        ("solvent_mixers", "machine", 2), ("solvent_operators", "operator", 2),
        ("qc_lab", "machine", 1), ("lab_technicians", "operator", 1),
        ("bascule", "machine", 1), ("weighing_operators", "operator", 1),
        ("packaging_machine", "machine", 1),
        ("manual_packing_benches", "machine", 2), ("packaging_operators", "operator", 5),
    ]
    stations = [
        _station("ResinAddition", "resin_stations", "resin_operators"),
        _station("PasteMixer", "paste_mixers", "paste_operators"),
        _station("ColorProduction", "permil_machines", "color_operators"),
        _station("SolventMixer", "solvent_mixers", "solvent_operators"),
        _station("QcLab", "qc_lab", "lab_technicians", value_class="non_value_adding"),
        _station("Weighing", "bascule", "weighing_operators", value_class="non_value_adding"),
        _station("PackagingMachine", "packaging_machine", None),
        _station("PackagingManualA", "manual_packing_benches", "packaging_operators"),
        _station("PackagingManualB", "manual_packing_benches", "packaging_operators"),
    ]
    sequence = ["ResinAddition", "PasteMixer", "ColorProduction", "SolventMixer", "QcLab", "Weighing"]
    routes = [_link("Source", "ResinAddition")]
    routes += [_link(a, b) for a, b in zip(sequence, sequence[1:])]
    routes.append({
        "from": "Weighing",
        "branches": [
            {"to": target, "probability": p, "transport_time": dict(_PLACEHOLDER)}
            for target, p in zip(_PACKAGING, (0.34, 0.33, 0.33))
        ],
    })
    routes += [_link(station, "Sink") for station in _PACKAGING]
    return {
        "name": "color-line",
        "stations": stations,
        "pools": [{"id": i, "kind": k, "capacity": c} for i, k, c in pools],
        "routes": routes,
        "qc": {
            "station": "QcLab",
            "fail_probability": 0.0,
            "rework_target": "SolventMixer",
            "rework_transport": dict(_PLACEHOLDER),
        },
        "source": {"interarrival": {"family": "constant", "value": 1.0}, "batch_size": 1},
        "horizon_hours": 8.0,
        "headcount": sum(c for _, k, c in pools if k == "operator"),
        "cost_rates": {
            i: dict(MACHINE_RATE if k == "machine" else OPERATOR_RATE) for i, k, _ in pools
        },
    }


def build_paper_line() -> LineModel:
    """The color production line with its calibrated parameter block applied."""
    return apply_parameters(_build(_paper_line_template()), PAPER_LINE_PARAMETERS)


def load_fixture(path: Optional[Union[str, Path]] = None) -> LineModel:
    return load_config(path or settings.FIXTURE_PATH)
