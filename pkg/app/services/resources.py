"""
Runtime resource pools with FIFO seize/release.

A release re-examines the head of the queue at the same clock instant and
grants as long as the head fits; a request that does not fit blocks every
request behind it (no overtaking).
"""
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, List, Optional, Tuple

from app.core.exceptions import NotHeldError, QtyExceedsCapacityError
from app.schemas.line import PoolKind


@dataclass(slots=True)
class Request:
    entity_id: int
    qty: int
    enqueued_at: float
    non_value_adding: bool = False
    on_grant: Optional[Callable[[float], None]] = None
    granted_at: Optional[float] = None


@dataclass(slots=True)
class ResourcePool:
    id: str
    kind: PoolKind
    capacity: int
    busy_rate: float = 0.0
    idle_rate: float = 0.0
    in_use: int = 0
    busy_time_accumulator: float = 0.0
    busy_nva_hours: float = 0.0
    queue: Deque[Request] = field(default_factory=deque)
    grant_log: List[int] = field(default_factory=list)
    # entity id -> (units held, held since, non-value-adding)
    _holders: Dict[int, Tuple[int, float, bool]] = field(default_factory=dict)

    @property
    def free(self) -> int:
        return self.capacity - self.in_use

    @property
    def busy_va_hours(self) -> float:
        return self.busy_time_accumulator - self.busy_nva_hours

    def held_by(self, entity_id: int) -> int:
        held = self._holders.get(entity_id)
        return held[0] if held else 0

    def seize(self, request: Request, now: float) -> bool:
        """Grant immediately when units are free and nobody waits, else enqueue."""
        if request.qty < 1:
            raise ValueError("qty must be >= 1")
        if request.qty > self.capacity:
            raise QtyExceedsCapacityError(
                f"Pool {self.id} has capacity {self.capacity}, request needs {request.qty}"
            )
        if not self.queue and self.free >= request.qty:
            self._grant(request, now)
            return True
        self.queue.append(request)
        return False

    def release(self, entity_id: int, qty: int, now: float) -> List[Request]:
        """Return units, accrue busy time, and grant waiting heads that now fit."""
        held = self._holders.get(entity_id)
        if held is None or held[0] < qty:
            raise NotHeldError(
                f"Entity {entity_id} holds {held[0] if held else 0} units of {self.id}, cannot release {qty}"
            )
        units, since, nva = held
        self._accrue(qty, since, now, nva)
        if units == qty:
            del self._holders[entity_id]
        else:
            # remaining units restart their interval at this instant
            self._accrue(units - qty, since, now, nva)
            self._holders[entity_id] = (units - qty, now, nva)
        self.in_use -= qty

        granted: List[Request] = []
        while self.queue and self.queue[0].qty <= self.free:
            request = self.queue.popleft()
            self._grant(request, now)
            granted.append(request)
        return granted

    def close(self, now: float) -> None:
        """Accrue busy time of units still held when the run stops."""
        for entity_id, (units, since, nva) in list(self._holders.items()):
            self._accrue(units, since, now, nva)
            self._holders[entity_id] = (units, now, nva)

    def _grant(self, request: Request, now: float) -> None:
        held = self._holders.get(request.entity_id)
        if held:
            units, since, nva = held
            self._accrue(units, since, now, nva)
            self._holders[request.entity_id] = (units + request.qty, now, request.non_value_adding)
        else:
            self._holders[request.entity_id] = (request.qty, now, request.non_value_adding)
        self.in_use += request.qty
        request.granted_at = now
        self.grant_log.append(request.entity_id)

    def _accrue(self, units: int, since: float, now: float, nva: bool) -> None:
        hours = units * (now - since)
        self.busy_time_accumulator += hours
        if nva:
            self.busy_nva_hours += hours
