"""
Single-replication executor for a production line.

A replication starts empty and idle at t=0 and stops when the HorizonEnd
event fires. Batches still inside the line at that moment are counted as
work in process; their queue waits are censored at the horizon.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

from app.core.config import settings
from app.core.exceptions import DivergenceError, SchemaError
from app.schemas.line import (
    SINK, SOURCE, Branch, LineModel, PoolKind, StationSpec, ValueClass,
)
from app.schemas.report import (
    PoolStats, PoolUsage, QueueStats, ReplicationResult,
)
from app.services.calendar import Event, EventCalendar, EventKind
from app.services.line_service import model_fingerprint
from app.services.random_streams import Purpose, StreamSet, draw
from app.services.resources import Request, ResourcePool
from app.services.statistics import TimeWeightedAccumulator, compute_costs
from app.services.validators import LineValidator

logger = logging.getLogger(__name__)


class EntityState(str, Enum):
    IN_QUEUE = "in_queue"
    IN_SERVICE = "in_service"
    IN_TRANSPORT = "in_transport"
    DEPARTED = "departed"
    WIP_AT_HORIZON = "wip_at_horizon"


@dataclass(slots=True)
class Visit:
    station_id: str
    queue_enter: float
    service_start: Optional[float] = None
    service_end: Optional[float] = None


@dataclass(slots=True)
class Entity:
    """One caldron of color."""
    id: int
    created_at: float
    station_history: List[Visit] = field(default_factory=list)
    qc_attempts: int = 0
    qc_passed: bool = False
    reworked: bool = False
    in_rework: bool = False  # from a failed verdict until the next pass
    state: EntityState = EntityState.IN_TRANSPORT
    departed_at: Optional[float] = None
    overlap_pending: bool = False
    handler: Optional[tuple] = None


class QueueMonitor:
    """Time-weighted length plus censored wait tally of one queue."""

    __slots__ = ("name", "length", "entries", "wait_sum", "wait_max", "waiting")

    def __init__(self, name: str):
        self.name = name
        self.length = TimeWeightedAccumulator()
        self.entries = 0
        self.wait_sum = 0.0
        self.wait_max = 0.0
        self.waiting: Dict[int, float] = {}

    def enter(self, entity_id: int, now: float) -> None:
        self.length.update(now, self.length.value + 1)
        self.entries += 1
        self.waiting[entity_id] = now

    def leave(self, entity_id: int, now: float) -> float:
        self.length.update(now, self.length.value - 1)
        return self._tally(now - self.waiting.pop(entity_id))

    def close(self, now: float) -> None:
        self.length.advance(now)
        for entered in self.waiting.values():
            self._tally(now - entered)

    def _tally(self, wait: float) -> float:
        self.wait_sum += wait
        self.wait_max = max(self.wait_max, wait)
        return wait

    def stats(self, horizon: float) -> QueueStats:
        return QueueStats(
            average_length=self.length.area / horizon,
            mean_wait=self.wait_sum / self.entries if self.entries else 0.0,
            max_wait=self.wait_max,
            entries=self.entries,
        )


def transport_queue_name(from_node: str, to_node: str) -> str:
    return f"{from_node}->{to_node}"


class ReplicationExecutor:

    def __init__(self, model: LineModel, seed: int, horizon: Optional[float] = None,
                 replication: int = 0, max_events: Optional[int] = None,
                 fingerprint: Optional[str] = None):
        violations = LineValidator().validate(model)
        if violations:
            raise SchemaError(violations)

        self.model = model
        self.seed = seed
        self.replication = replication
        self.horizon = model.horizon_hours if horizon is None else horizon
        self.max_events = settings.MAX_EVENTS if max_events is None else max_events
        self.fingerprint = fingerprint or model_fingerprint(model)

        self.calendar = EventCalendar()
        self.streams = StreamSet(seed, replication)
        self.stations: Dict[str, StationSpec] = {s.id: s for s in model.stations}
        self.routes = {r.from_node: r for r in model.routes}
        self.pools: Dict[str, ResourcePool] = {}
        for spec in model.pools:
            rate = model.cost_rates.get(spec.id)
            self.pools[spec.id] = ResourcePool(
                id=spec.id, kind=spec.kind, capacity=spec.capacity,
                busy_rate=rate.busy_rate if rate else 0.0,
                idle_rate=rate.idle_rate if rate else 0.0,
            )
        self.queues: Dict[str, QueueMonitor] = {s.id: QueueMonitor(s.id) for s in model.stations}
        for route in model.routes:
            for branch in route.branches:
                if branch.handlers > 0:
                    name = transport_queue_name(route.from_node, branch.to)
                    self.queues[name] = QueueMonitor(name)

        self.entities: Dict[int, Entity] = {}
        self._next_id = 0
        self.outputs = 0
        self.forced_passes = 0
        self.flow_time_sum = 0.0
        self.events = 0

    # main loop

    def run(self) -> ReplicationResult:
        source = self.model.source
        if source is not None:
            self.calendar.schedule(Event(source.first_arrival_hours, EventKind.ENTITY_ARRIVAL))
        self.calendar.schedule(Event(self.horizon, EventKind.HORIZON_END))

        handlers = {
            EventKind.ENTITY_ARRIVAL: self._on_arrival,
            EventKind.TRANSPORT_END: self._on_transport_end,
            EventKind.SERVICE_END: self._on_service_end,
            EventKind.QC_VERDICT: self._on_qc_verdict,
        }
        while True:
            event = self.calendar.advance()
            if event is None or event.kind == EventKind.HORIZON_END:
                break
            self.events += 1
            if self.events > self.max_events:
                raise DivergenceError(
                    f"Replication {self.replication} exceeded {self.max_events} events at t={event.time:.4f}"
                )
            handlers[event.kind](event)
        return self._finish()

    # event handlers

    def _on_arrival(self, event: Event) -> None:
        source = self.model.source
        for _ in range(source.batch_size):
            entity = Entity(id=self._next_id, created_at=event.time)
            self._next_id += 1
            self.entities[entity.id] = entity
            self._route_out(entity, SOURCE, event.time)
        gap = draw(source.interarrival, self.streams.get(SOURCE, Purpose.INTERARRIVAL))
        self.calendar.schedule(Event(event.time + gap, EventKind.ENTITY_ARRIVAL))

    def _on_transport_end(self, event: Event) -> None:
        entity = self.entities[event.entity_id]
        entity.overlap_pending = False
        if entity.handler is not None:
            pool_id, qty = entity.handler
            entity.handler = None
            self._release(entity, pool_id, qty, event.time)
        if event.station_id == SINK:
            self._depart(entity, event.time)
        else:
            self._arrive(entity, self.stations[event.station_id], event.time)

    def _on_service_end(self, event: Event) -> None:
        entity = self.entities[event.entity_id]
        station = self.stations[event.station_id]
        entity.station_history[-1].service_end = event.time
        if station.operators_required > 0:
            self._release(entity, station.operator_pool, station.operators_required, event.time)
        self._release(entity, station.machine_pool, 1, event.time)

        entity.state = EntityState.IN_TRANSPORT
        qc = self.model.qc
        if qc is not None and station.id == qc.station:
            self.calendar.schedule(Event(event.time, EventKind.QC_VERDICT, entity_id=entity.id,
                                         station_id=station.id))
        elif not entity.overlap_pending:
            self._route_out(entity, station.id, event.time)

    def _on_qc_verdict(self, event: Event) -> None:
        qc = self.model.qc
        entity = self.entities[event.entity_id]
        entity.qc_attempts += 1
        failed = self.streams.get(qc.station, Purpose.QC).uniform() < qc.fail_probability
        if failed and qc.max_attempts is not None and entity.qc_attempts >= qc.max_attempts:
            failed = False
            self.forced_passes += 1
        if failed:
            entity.reworked = True
            entity.in_rework = True
            delay = draw(qc.rework_transport, self.streams.get(qc.station, Purpose.TRANSPORT))
            self.calendar.schedule(Event(event.time + delay, EventKind.TRANSPORT_END,
                                         entity_id=entity.id, station_id=qc.rework_target))
        else:
            entity.qc_passed = True
            entity.in_rework = False
            self._route_out(entity, qc.station, event.time)

    # entity movement

    def _choose_branch(self, node: str) -> Branch:
        branches = self.routes[node].branches
        if len(branches) == 1:
            return branches[0]
        u = self.streams.get(node, Purpose.ROUTING).uniform()
        cumulative = 0.0
        for branch in branches:
            cumulative += branch.probability
            if u < cumulative:
                return branch
        return branches[-1]

    def _route_out(self, entity: Entity, node: str, now: float) -> None:
        branch = self._choose_branch(node)
        entity.state = EntityState.IN_TRANSPORT
        if branch.handlers > 0:
            queue = self.queues[transport_queue_name(node, branch.to)]
            queue.enter(entity.id, now)

            def granted(t: float) -> None:
                queue.leave(entity.id, t)
                entity.handler = (branch.handler_pool, branch.handlers)
                self._begin_transport(entity, node, branch, t)

            request = Request(entity.id, branch.handlers, now, non_value_adding=True, on_grant=granted)
            if self.pools[branch.handler_pool].seize(request, now):
                granted(now)
        else:
            self._begin_transport(entity, node, branch, now)

    def _begin_transport(self, entity: Entity, node: str, branch: Branch, now: float) -> None:
        delay = draw(branch.transport_time, self.streams.get(node, Purpose.TRANSPORT))
        self.calendar.schedule(Event(now + delay, EventKind.TRANSPORT_END,
                                     entity_id=entity.id, station_id=branch.to))

    def _arrive(self, entity: Entity, station: StationSpec, now: float) -> None:
        entity.state = EntityState.IN_QUEUE
        entity.station_history.append(Visit(station.id, now))
        self.queues[station.id].enter(entity.id, now)
        nva = self._is_nva(entity, station)

        def machine_granted(t: float) -> None:
            if station.operators_required == 0:
                self._start_service(entity, station, t)
                return
            request = Request(entity.id, station.operators_required, t, non_value_adding=nva,
                              on_grant=lambda granted_at: self._start_service(entity, station, granted_at))
            if self.pools[station.operator_pool].seize(request, t):
                self._start_service(entity, station, t)

        request = Request(entity.id, 1, now, non_value_adding=nva, on_grant=machine_granted)
        if self.pools[station.machine_pool].seize(request, now):
            machine_granted(now)

    def _start_service(self, entity: Entity, station: StationSpec, now: float) -> None:
        self.queues[station.id].leave(entity.id, now)
        entity.station_history[-1].service_start = now
        entity.state = EntityState.IN_SERVICE
        duration = draw(station.service, self.streams.get(station.id, Purpose.SERVICE))
        self.calendar.schedule(Event(now + duration, EventKind.SERVICE_END,
                                     entity_id=entity.id, station_id=station.id))
        if station.overlap_with_outbound_transport:
            # the vessel leaves when mixing starts; it reaches the next station
            # after max(service, transport)
            branch = self._choose_branch(station.id)
            delay = draw(branch.transport_time, self.streams.get(station.id, Purpose.TRANSPORT))
            entity.overlap_pending = True
            self.calendar.schedule(Event(now + max(duration, delay), EventKind.TRANSPORT_END,
                                         entity_id=entity.id, station_id=branch.to))

    def _release(self, entity: Entity, pool_id: str, qty: int, now: float) -> None:
        for request in self.pools[pool_id].release(entity.id, qty, now):
            request.on_grant(now)

    def _depart(self, entity: Entity, now: float) -> None:
        entity.state = EntityState.DEPARTED
        entity.departed_at = now
        self.outputs += 1
        self.flow_time_sum += now - entity.created_at

    def _is_nva(self, entity: Entity, station: StationSpec) -> bool:
        return station.value_class == ValueClass.NON_VALUE_ADDING or entity.in_rework

    # results

    def _finish(self) -> ReplicationResult:
        horizon = self.horizon
        for pool in self.pools.values():
            pool.close(horizon)
        for queue in self.queues.values():
            queue.close(horizon)
        wip = 0
        for entity in self.entities.values():
            if entity.state != EntityState.DEPARTED:
                entity.state = EntityState.WIP_AT_HORIZON
                wip += 1

        pool_stats: Dict[str, PoolStats] = {}
        usage: Dict[str, PoolUsage] = {}
        capacity_hours = 0.0
        busy_hours = 0.0
        for pool in self.pools.values():
            available = pool.capacity * horizon
            busy = pool.busy_time_accumulator
            idle = max(available - busy, 0.0)
            pool_stats[pool.id] = PoolStats(
                kind=pool.kind,
                capacity=pool.capacity,
                busy_hours=busy,
                idle_hours=idle,
                utilization=busy / available if available > 0 else 0.0,
                busy_va_hours=pool.busy_va_hours,
                busy_nva_hours=pool.busy_nva_hours,
            )
            usage[pool.id] = PoolUsage(
                busy_va_hours=max(pool.busy_va_hours, 0.0),
                busy_nva_hours=pool.busy_nva_hours,
                idle_hours=idle,
            )
            capacity_hours += available
            busy_hours += busy

        queue_stats = {name: q.stats(horizon) for name, q in self.queues.items()}
        created = len(self.entities)
        total_wait = sum(q.wait_sum for q in self.queues.values())
        result = ReplicationResult(
            replication=self.replication,
            seed=self.seed,
            horizon=horizon,
            model_fingerprint=self.fingerprint,
            outputs=self.outputs,
            created=created,
            wip_at_horizon=wip,
            forced_passes=self.forced_passes,
            events=self.events,
            mean_flow_time=self.flow_time_sum / self.outputs if self.outputs else 0.0,
            average_number_in_queue=sum(q.average_length for q in queue_stats.values()),
            average_waiting_time_in_queue=total_wait / created if created else 0.0,
            average_resource_utilization=busy_hours / capacity_hours if capacity_hours > 0 else 0.0,
            queues=queue_stats,
            pools=pool_stats,
            cost=compute_costs(usage, self.model.cost_rates),
        )
        logger.debug("Replication %d: outputs=%d wip=%d events=%d",
                     self.replication, result.outputs, wip, self.events)
        return result


def run_replication(model: LineModel, seed: int, horizon: Optional[float] = None,
                    replication: int = 0, max_events: Optional[int] = None) -> ReplicationResult:
    return ReplicationExecutor(model, seed, horizon, replication, max_events).run()
