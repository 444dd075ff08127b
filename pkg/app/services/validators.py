from typing import List, Set

import networkx as nx

from app.schemas.line import SINK, SOURCE, LineModel, PoolKind
from app.services.random_streams import mean_of, param_violation

PROBABILITY_TOLERANCE = 1e-9


class LineValidator:
    """Validates cross-field invariants of a line model."""

    def validate(self, model: LineModel) -> List[str]:
        """Return every violation found; an empty list means the model is valid."""
        violations: List[str] = []
        violations += self._check_ids(model)
        violations += self._check_pools(model)
        violations += self._check_stations(model)
        violations += self._check_routes(model)
        violations += self._check_qc(model)
        violations += self._check_source(model)
        violations += self._check_graph(model)
        if model.horizon_hours <= 0:
            violations.append("horizon_hours: must be > 0")
        declared = model.operator_capacity()
        if model.headcount and model.headcount != declared:
            violations.append(
                f"headcount: {model.headcount} does not match operator pool capacities ({declared})"
            )
        for pool_id, rate in model.cost_rates.items():
            if model.pool(pool_id) is None:
                violations.append(f"cost_rates.{pool_id}: unknown pool")
            if rate.busy_rate < 0 or rate.idle_rate < 0:
                violations.append(f"cost_rates.{pool_id}: rates must be >= 0")
        return violations

    def _check_ids(self, model: LineModel) -> List[str]:
        violations = []
        for label, ids in (("stations", [s.id for s in model.stations]),
                           ("pools", [p.id for p in model.pools])):
            seen: Set[str] = set()
            for item_id in ids:
                if item_id in seen:
                    violations.append(f"{label}.{item_id}: duplicate id")
                if item_id in (SOURCE, SINK):
                    violations.append(f"{label}.{item_id}: reserved name")
                seen.add(item_id)
        if not model.stations:
            violations.append("stations: at least one station is required")
        return violations

    def _check_pools(self, model: LineModel) -> List[str]:
        return [
            f"pools.{pool.id}: machine pool capacity must be >= 1"
            for pool in model.pools
            if pool.kind == PoolKind.MACHINE and pool.capacity < 1
        ]

    def _check_stations(self, model: LineModel) -> List[str]:
        violations = []
        for station in model.stations:
            prefix = f"stations.{station.id}"
            machine = model.pool(station.machine_pool)
            if machine is None:
                violations.append(f"{prefix}.machine_pool: unknown pool '{station.machine_pool}'")
            elif machine.kind != PoolKind.MACHINE:
                violations.append(f"{prefix}.machine_pool: '{machine.id}' is not a machine pool")

            if station.operators_required > 0:
                operators = model.pool(station.operator_pool) if station.operator_pool else None
                if operators is None:
                    violations.append(f"{prefix}.operator_pool: unknown pool '{station.operator_pool}'")
                elif operators.kind != PoolKind.OPERATOR:
                    violations.append(f"{prefix}.operator_pool: '{operators.id}' is not an operator pool")
                elif station.operators_required > operators.capacity:
                    violations.append(
                        f"{prefix}.operators_required: {station.operators_required} exceeds "
                        f"capacity {operators.capacity} of '{operators.id}'"
                    )
            elif station.operator_pool and model.pool(station.operator_pool) is None:
                violations.append(f"{prefix}.operator_pool: unknown pool '{station.operator_pool}'")

            problem = param_violation(station.service)
            if problem:
                violations.append(f"{prefix}.service: {problem}")
        return violations

    def _check_routes(self, model: LineModel) -> List[str]:
        violations = []
        station_ids = {s.id for s in model.stations}
        seen: Set[str] = set()
        for route in model.routes:
            prefix = f"routes.{route.from_node}"
            if route.from_node in seen:
                violations.append(f"{prefix}: duplicate route")
            seen.add(route.from_node)
            if route.from_node != SOURCE and route.from_node not in station_ids:
                violations.append(f"{prefix}: unknown node '{route.from_node}'")
            if not route.branches:
                violations.append(f"{prefix}: at least one branch is required")
                continue
            total = sum(b.probability for b in route.branches)
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                violations.append(f"{prefix}: branch probabilities sum to {total}, expected 1")
            origin = model.station(route.from_node)
            for branch in route.branches:
                where = f"{prefix}.{branch.to}"
                if branch.to != SINK and branch.to not in station_ids:
                    violations.append(f"{where}: unknown destination")
                if not 0.0 <= branch.probability <= 1.0:
                    violations.append(f"{where}.probability: must be in [0, 1]")
                problem = param_violation(branch.transport_time)
                if problem:
                    violations.append(f"{where}.transport_time: {problem}")
                if branch.handlers > 0:
                    pool = model.pool(branch.handler_pool) if branch.handler_pool else None
                    if pool is None:
                        violations.append(f"{where}.handler_pool: unknown pool '{branch.handler_pool}'")
                    elif branch.handlers > pool.capacity:
                        violations.append(
                            f"{where}.handlers: {branch.handlers} exceeds capacity {pool.capacity}"
                        )
                    if origin is not None and origin.overlap_with_outbound_transport:
                        violations.append(f"{where}: overlap is not allowed on a handled transport")
        return violations

    def _check_qc(self, model: LineModel) -> List[str]:
        qc = model.qc
        if qc is None:
            return []
        violations = []
        station = model.station(qc.station)
        if station is None:
            violations.append(f"qc.station: unknown station '{qc.station}'")
        elif station.overlap_with_outbound_transport:
            violations.append("qc.station: a QC station cannot overlap its outbound transport")
        if model.station(qc.rework_target) is None:
            violations.append(f"qc.rework_target: unknown station '{qc.rework_target}'")
        if qc.fail_probability >= 1.0:
            violations.append("qc.fail_probability: must be < 1")
        problem = param_violation(qc.rework_transport)
        if problem:
            violations.append(f"qc.rework_transport: {problem}")
        return violations

    def _check_source(self, model: LineModel) -> List[str]:
        source = model.source
        if source is None:
            return []
        violations = []
        problem = param_violation(source.interarrival)
        if problem:
            violations.append(f"source.interarrival: {problem}")
        else:
            if mean_of(source.interarrival) <= 0:
                violations.append("source.interarrival: mean must be > 0")
        if source.batch_size < 1:
            violations.append("source.batch_size: must be >= 1")
        if source.first_arrival_hours < 0:
            violations.append("source.first_arrival_hours: must be >= 0")
        if model.route_from(SOURCE) is None:
            violations.append("routes: no route leaves Source")
        return violations

    def _check_graph(self, model: LineModel) -> List[str]:
        graph = route_graph(model)
        violations = []
        if not nx.is_directed_acyclic_graph(graph):
            violations.append("routes: route graph contains a cycle")
            return violations
        reachable = descendants(graph, SOURCE)
        if model.source is not None:
            for station in model.stations:
                if station.id not in reachable:
                    violations.append(f"stations.{station.id}: unreachable from Source")
            if SINK not in reachable:
                violations.append("routes: Sink is not reachable from Source")
        for station in model.stations:
            if model.route_from(station.id) is None:
                violations.append(f"stations.{station.id}: no outbound route")
            elif SINK not in descendants(graph, station.id):
                violations.append(f"stations.{station.id}: Sink is not reachable")
        if model.qc is not None and model.station(model.qc.station) is not None:
            bypass = graph.subgraph(n for n in graph if n != model.qc.station)
            if SINK in descendants(bypass, SOURCE):
                violations.append("routes: Sink is reachable without passing the QC station")
        return violations


def route_graph(model: LineModel) -> nx.DiGraph:
    """The route graph; the QC rework edge is not part of it."""
    graph = nx.DiGraph()
    for route in model.routes:
        graph.add_node(route.from_node)
        graph.add_edges_from((route.from_node, b.to) for b in route.branches)
    return graph


def descendants(graph: nx.DiGraph, start: str) -> Set[str]:
    return nx.descendants(graph, start) if start in graph else set()


def ancestors(graph: nx.DiGraph, target: str) -> Set[str]:
    return nx.ancestors(graph, target) if target in graph else set()


validator = LineValidator()
