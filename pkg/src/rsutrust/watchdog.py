"""Overhearing monitor for next-hop forwarding: forwarded, dropped and modified packets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

from .model import DataPacket, NodeId, packet_digest

NEUTRAL = 0.5


def expected_forward_time(length_bits: float, rate: float, distance: float,
                          v_prop: float, t_other: float) -> float:
    """Transmission plus propagation plus a fixed processing allowance."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    if v_prop <= 0:
        raise ValueError("propagation speed must be positive")
    return length_bits / rate + distance / v_prop + t_other


@dataclass
class RoutingObservation:
    observed: NodeId
    pf: int = 0
    pd: int = 0
    pm: int = 1
    window_id: int = 0
    # forwarding attempts handed to the observed node this window
    sent: int = 0

    def reset(self, window_id: int) -> None:
        self.pf = self.pd = self.sent = 0
        self.pm = 1
        self.window_id = window_id


def trust_routing(obs: RoutingObservation) -> float:
    total = obs.pf + obs.pd
    if total == 0:
        return NEUTRAL
    return obs.pf / total * obs.pm


@dataclass(slots=True)
class WatchdogEntry:
    digest: bytes
    sent_at: float
    next_hop: NodeId
    deadline: float


class WatchdogBuffer:
    """Recently forwarded packets awaiting an overheard retransmission by the next hop."""

    def __init__(self, owner: NodeId, schedule_timeout: Optional[Callable[[int, float], None]] = None):
        self.owner = owner
        self.entries: Dict[int, WatchdogEntry] = {}
        self.observations: Dict[NodeId, RoutingObservation] = {}
        self.window_id = 0
        self._schedule_timeout = schedule_timeout

    def observation(self, node: NodeId) -> RoutingObservation:
        obs = self.observations.get(node)
        if obs is None:
            obs = self.observations[node] = RoutingObservation(node, window_id=self.window_id)
        return obs

    def on_forward_to_next_hop(self, packet: DataPacket, next_hop: NodeId, now: float,
                               t_expected: float) -> float:
        if packet.id in self.entries:
            raise KeyError(f"packet {packet.id} already buffered")
        deadline = now + t_expected
        self.entries[packet.id] = WatchdogEntry(packet_digest(packet), now, next_hop, deadline)
        self.observation(next_hop).sent += 1
        if self._schedule_timeout is not None:
            self._schedule_timeout(packet.id, deadline)
        return deadline

    def on_overhear(self, packet: DataPacket, forwarder: NodeId, now: float) -> Optional[bool]:
        """Returns True for an intact forward, False for a modified one, None if unmatched."""
        entry = self.entries.get(packet.id)
        if entry is None or entry.next_hop != forwarder:
            return None
        del self.entries[packet.id]
        obs = self.observation(forwarder)
        if packet_digest(packet) == entry.digest:
            obs.pf += 1
            return True
        obs.pm = 0
        return False

    def on_timeout(self, packet_id: int, now: float) -> Optional[NodeId]:
        """Counts a drop if the entry is still waiting; returns the silent next hop."""
        entry = self.entries.pop(packet_id, None)
        if entry is None:
            return None
        self.observation(entry.next_hop).pd += 1
        return entry.next_hop

    def start_window(self, window_id: int) -> None:
        self.window_id = window_id
        for obs in self.observations.values():
            obs.reset(window_id)
