"""Discrete-event core: a clock, a (fire_time, sequence) ordered queue and range-limited broadcast."""
from __future__ import annotations

import enum
import heapq
import math
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Tuple

from .model import NodeId, Position

SPEED_OF_LIGHT = 3.0e8


class Action(enum.IntEnum):
    DELIVER = 0
    BEACON_TICK = 1
    OBSERVATION_WINDOW_END = 2
    MOBILITY_TICK = 3
    TRAFFIC_EVENT_START = 4
    PACKET_INJECT = 5
    WATCHDOG_TIMEOUT = 6
    ROUTING_TICK = 7
    ALERT_NOTIFY = 8


class Event(NamedTuple):
    fire_time: float
    sequence: int
    action: Action
    payload: Any


class PastEventError(ValueError):
    pass


class EventQueue:
    def __init__(self) -> None:
        self._heap: List[tuple] = []
        self._seq = 0
        self.clock = 0.0
        self.processed = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, fire_time: float, action: Action, payload: Any = None) -> int:
        if fire_time < self.clock:
            raise PastEventError(f"event at {fire_time} is before the clock {self.clock}")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (fire_time, seq, action, payload))
        return seq

    def peek_time(self) -> float:
        return self._heap[0][0] if self._heap else math.inf

    def pop(self) -> Event:
        fire_time, seq, action, payload = heapq.heappop(self._heap)
        self.clock = fire_time
        self.processed += 1
        return Event(fire_time, seq, action, payload)

    def run_until(self, end: float, handlers: Mapping[Action, Callable[[float, Any], None]]) -> None:
        """Dispatch events with fire_time <= end in queue order."""
        heap = self._heap
        pop = heapq.heappop
        table = [handlers.get(a) for a in Action]
        while heap and heap[0][0] <= end:
            fire_time, _, action, payload = pop(heap)
            self.clock = fire_time
            self.processed += 1
            table[action](fire_time, payload)


def tx_delay(length_bits: float, rate: float, distance: float, v_prop: float = SPEED_OF_LIGHT) -> float:
    """Transmission plus propagation time; queuing is not simulated."""
    return length_bits / rate + distance / v_prop


def broadcast(queue: EventQueue, sender: NodeId, msg: Any, positions: Mapping[NodeId, Position],
              range_m: float, length_bits: float, rate: float) -> List[Tuple[NodeId, float]]:
    """One DELIVER per in-range node other than the sender; returns (receiver, time) pairs."""
    if sender not in positions:
        raise KeyError(f"unknown sender {sender!r}")
    here = positions[sender]
    out = []
    for node, pos in positions.items():
        if node == sender:
            continue
        d = math.hypot(pos[0] - here[0], pos[1] - here[1])
        if d <= range_m:
            t = queue.clock + tx_delay(length_bits, rate, d)
            queue.schedule(t, Action.DELIVER, (msg, node))
            out.append((node, t))
    return out
