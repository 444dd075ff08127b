"""
Event calendar and simulation clock.

Events are ordered by (time, kind priority, seq): at equal times service
ends fire before QC verdicts, transport ends, arrivals and finally the
horizon, and events of equal kind fire in insertion order.
"""
import heapq
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional

from app.core.exceptions import PastTimeError


class EventKind(IntEnum):
    SERVICE_END = 0
    QC_VERDICT = 1
    TRANSPORT_END = 2
    ENTITY_ARRIVAL = 3
    HORIZON_END = 4


@dataclass(slots=True, order=True)
class Event:
    time: float
    kind: EventKind
    seq: int = field(default=-1)
    entity_id: Optional[int] = field(default=None, compare=False)
    station_id: Optional[str] = field(default=None, compare=False)


class EventCalendar:

    def __init__(self) -> None:
        self._heap: List[Event] = []
        self._seq = 0
        self.clock = 0.0

    def schedule(self, event: Event) -> "EventCalendar":
        if not math.isfinite(event.time):
            raise PastTimeError(f"Event time {event.time} is not finite")
        if event.time < self.clock:
            raise PastTimeError(
                f"Cannot schedule {event.kind.name} at t={event.time} before clock {self.clock}"
            )
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, event)
        return self

    def advance(self) -> Optional[Event]:
        """Pop the next event and move the clock to it; None when empty."""
        if not self._heap:
            return None
        event = heapq.heappop(self._heap)
        self.clock = event.time
        return event

    def peek(self) -> Optional[Event]:
        return self._heap[0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)
