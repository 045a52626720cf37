"""Domain types, grid geometry and message formats shared by the simulator."""
from __future__ import annotations

import enum
import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np


class NodeKind(enum.IntEnum):
    RSU = 0
    VEHICLE = 1


class NodeId(NamedTuple):
    kind: NodeKind
    index: int

    def __repr__(self) -> str:
        return f"{self.kind.name[0]}{self.index}"


def rsu_id(index: int) -> NodeId:
    return NodeId(NodeKind.RSU, index)


def vehicle_id(index: int) -> NodeId:
    return NodeId(NodeKind.VEHICLE, index)


class Position(NamedTuple):
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


class EventType(enum.IntEnum):
    ACCIDENT = 0
    BAD_ROAD = 1
    IGNORE_RSU = 2


# the two ground-truth road events vehicles can observe
ROAD_EVENTS = (EventType.ACCIDENT, EventType.BAD_ROAD)

SENSOR_FIELDS = ("temperature", "humidity", "carbon_level")
BEACON_FIELDS = ("speed_avg", "density") + SENSOR_FIELDS


@dataclass(frozen=True, slots=True)
class Beacon:
    sender: NodeId
    position: Position
    timestamp: float
    speed_avg: float
    density: float
    temperature: float
    humidity: float
    carbon_level: float

    def __post_init__(self) -> None:
        if self.density < 0:
            raise ValueError("density must be non-negative")
        if not 0.0 <= self.humidity <= 100.0:
            raise ValueError("humidity must lie in [0, 100]")

    def sensor_values(self) -> Tuple[float, float, float]:
        return (self.temperature, self.humidity, self.carbon_level)


@dataclass(frozen=True, slots=True)
class TrafficAlert:
    sender_id: NodeId
    position: Position
    timestamp: float
    event_type: EventType
    event_value: int
    location: Position

    def __post_init__(self) -> None:
        if self.event_value not in (0, 1):
            raise ValueError("event_value must be 0 or 1")


HOP_LIMIT = 6


@dataclass(frozen=True, slots=True)
class DataPacket:
    id: int
    source: NodeId
    destination: NodeId
    immutable_payload: bytes
    mutable_header: bytes = b""
    hop_count: int = 0
    created_at: float = 0.0

    def __post_init__(self) -> None:
        if self.hop_count > HOP_LIMIT:
            raise ValueError(f"hop_count {self.hop_count} exceeds {HOP_LIMIT}")


def make_payload(packet_id: int, source: NodeId, destination: NodeId, size: int) -> bytes:
    head = struct.pack("<qbibi", packet_id, source.kind, source.index, destination.kind, destination.index)
    return head + bytes(max(0, size - len(head)))


def packet_digest(packet: DataPacket) -> bytes:
    """64-bit digest over the payload only; header and hop count are excluded."""
    return hashlib.blake2b(packet.immutable_payload, digest_size=8).digest()


def in_range(a: Position, b: Position, range_m: float) -> bool:
    if range_m <= 0:
        raise ValueError("range must be positive")
    return math.hypot(a[0] - b[0], a[1] - b[1]) <= range_m


def one_hop_neighbors(node: NodeId, topology: Dict[NodeId, Position], range_m: float,
                      kind: Optional[NodeKind] = None) -> Set[NodeId]:
    """Other nodes (optionally of one kind) within range of `node`."""
    if node not in topology:
        raise KeyError(f"unknown node {node!r}")
    here = topology[node]
    return {
        other for other, pos in topology.items()
        if other != node and (kind is None or other.kind == kind) and in_range(here, pos, range_m)
    }


@dataclass(frozen=True)
class GridTopology:
    """RSUs sit on the intersections of a square Manhattan road grid."""

    side: int
    spacing: float
    origin: Tuple[float, float]
    rsu_range: float

    @classmethod
    def build(cls, n_rsus: int, spacing: float, area_side: float, rsu_range: float) -> "GridTopology":
        side = math.isqrt(n_rsus)
        if side * side != n_rsus:
            raise ValueError("n_rsus must be a perfect square")
        extent = (side - 1) * spacing
        offset = (area_side - extent) / 2.0
        return cls(side, spacing, (offset, offset), rsu_range)

    @property
    def n(self) -> int:
        return self.side * self.side

    def position(self, index: int) -> Position:
        row, col = divmod(index, self.side)
        return Position(self.origin[0] + col * self.spacing, self.origin[1] + row * self.spacing)

    def positions(self) -> np.ndarray:
        return np.array([self.position(i) for i in range(self.n)], dtype=float)

    def topology(self) -> Dict[NodeId, Position]:
        return {rsu_id(i): self.position(i) for i in range(self.n)}

    def road_neighbors(self, index: int) -> List[int]:
        """Intersections joined to `index` by a road segment."""
        row, col = divmod(index, self.side)
        out = []
        for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            r, c = row + dr, col + dc
            if 0 <= r < self.side and 0 <= c < self.side:
                out.append(r * self.side + c)
        return out

    def radio_neighbors(self) -> List[List[int]]:
        """RSU indices within R2R range of each RSU, sorted."""
        pos = self.positions()
        out = []
        for i in range(self.n):
            d = np.hypot(pos[:, 0] - pos[i, 0], pos[:, 1] - pos[i, 1])
            out.append([j for j in range(self.n) if j != i and d[j] <= self.rsu_range])
        return out


def hop_distances(neighbors: Sequence[Iterable[int]], start: int) -> Dict[int, int]:
    """Breadth-first hop counts from `start` over an adjacency list."""
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in neighbors[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


@dataclass
class RoadEvent:
    event_type: EventType
    location: Position
    start_time: float
    region: int
    observers: List[int] = field(default_factory=list)


class GroundTruth:
    """Authoritative environment: sensor fields, road speed, regional density, events.

    Sensor fields vary smoothly in space and slowly in time around fixed base
    values. Regional density is an exponential moving average of the number of
    vehicles in each RSU's Voronoi region per km of road.
    """

    BASE = (25.0, 60.0, 400.0)

    def __init__(self, rng: np.random.Generator, speed: float, region_road_km: np.ndarray,
                 spatial_amplitude: float = 0.01, temporal_amplitude: float = 0.01,
                 wavelength: float = 3000.0, period: float = 1200.0,
                 density_smoothing: float = 600.0):
        self.speed = speed
        self.region_road_km = np.asarray(region_road_km, dtype=float)
        self.spatial_amplitude = spatial_amplitude
        self.temporal_amplitude = temporal_amplitude
        self.wavelength = wavelength
        self.period = period
        self.density_smoothing = density_smoothing
        self._phase = rng.uniform(0.0, 2 * math.pi, size=(3, 3))
        self._density: Optional[np.ndarray] = None
        self._density_time = 0.0
        self.events: List[RoadEvent] = []

    def spatial_terms(self, xy: np.ndarray) -> np.ndarray:
        """Static spatial component of each sensor field, shape (n, 3)."""
        xy = np.atleast_2d(xy)
        k = 2 * math.pi / self.wavelength
        px, py = self._phase[:, 0], self._phase[:, 1]
        return np.sin(k * xy[:, :1] + px) * np.sin(k * xy[:, 1:2] + py)

    def environment_from(self, spatial: np.ndarray, t: float) -> np.ndarray:
        temporal = np.sin(2 * math.pi * t / self.period + self._phase[:, 2])
        return np.asarray(self.BASE) * (1.0 + self.spatial_amplitude * spatial + self.temporal_amplitude * temporal)

    def environment(self, xy: np.ndarray, t: float) -> np.ndarray:
        """Sensor readings (temperature, humidity, carbon) at each row of `xy`."""
        return self.environment_from(self.spatial_terms(xy), t)

    def observe_counts(self, counts: np.ndarray, t: float) -> None:
        raw = np.asarray(counts, dtype=float) / self.region_road_km
        if self._density is None:
            self._density = raw
        else:
            dt = t - self._density_time
            a = 1.0 - math.exp(-dt / self.density_smoothing) if dt > 0 else 0.0
            self._density = self._density + a * (raw - self._density)
        self._density_time = t

    def density(self, region: int) -> float:
        if self._density is None:
            return 0.0
        return float(self._density[region])

    def densities(self) -> np.ndarray:
        if self._density is None:
            return np.zeros_like(self.region_road_km)
        return self._density.copy()
