"""Beacon-rate flooding detection, two-stage beacon content checks and weighted beacon trust."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Callable, Deque, Iterable, List, Mapping, Optional, Sequence

from .model import Beacon, EventType, NodeId, Position, TrafficAlert

NEUTRAL = 0.5
EPS = 1e-6


class Relay(enum.Enum):
    FORWARD = "forward"
    DROP = "drop"


@dataclass(frozen=True)
class ContentThresholds:
    th1: float = 0.10  # speed / density, relative
    th2: float = 0.10  # sensor fields, relative
    th3: float = 2.0   # seconds between alert and beacon

    def __post_init__(self) -> None:
        if min(self.th1, self.th2, self.th3) <= 0:
            raise ValueError("thresholds must be positive")


@dataclass(frozen=True)
class BeaconVerdict:
    index: int
    value: int
    weight_count: int


class BeaconRateHistory:
    """Beacon counts for the latest `slots` windows, oldest first, zero padded."""

    def __init__(self, slots: int = 5):
        if slots < 1:
            raise ValueError("need at least one slot")
        self.slots = slots
        self.counts: Deque[int] = deque([0] * slots, maxlen=slots)
        self.observed = 0

    def push(self, count: int) -> None:
        self.counts.append(count)
        self.observed += 1


def weighted_average_rate(counts: Sequence[float], normalize: bool = False) -> float:
    z = len(counts)
    total = sum((t / z) * b for t, b in enumerate(counts, start=1))
    if normalize:
        total /= (z + 1) / 2.0
    return total


def flooding_check(history: BeaconRateHistory | Sequence[float], count: float,
                   normalize: bool = False) -> bool:
    """True when the current window's count exceeds the weighted historical rate."""
    counts = list(history.counts) if isinstance(history, BeaconRateHistory) else list(history)
    return count > weighted_average_rate(counts, normalize)


def relative_discrepancy(claimed: float, reference: float) -> float:
    return abs(claimed - reference) / max(abs(reference), EPS)


def verify_speed_density(estimate: Optional[Mapping[str, float]], claimed: Mapping[str, float],
                         th1: float) -> bool:
    """Valid when both claims sit within th1 of the observer's estimate (or nothing to compare)."""
    if not estimate:
        return True
    for key in ("speed", "density"):
        if key in estimate and relative_discrepancy(claimed[key], estimate[key]) > th1:
            return False
    return True


def sensor_disagrees(sensed: Sequence[float], beacon: Beacon, th2: float) -> bool:
    return any(relative_discrepancy(b, s) > th2 for s, b in zip(sensed, beacon.sensor_values()))


def vehicle_sensor_check(sensed: Sequence[float], beacon: Beacon, th2: float, vehicle: NodeId,
                         vehicle_position: Position, now: float) -> Optional[TrafficAlert]:
    """An IGNORE_RSU alert when any sensed field differs from the beacon by more than th2."""
    if not sensor_disagrees(sensed, beacon, th2):
        return None
    return TrafficAlert(vehicle, vehicle_position, now, EventType.IGNORE_RSU, 0, beacon.position)


def relay_ignore_alert(alert: TrafficAlert, own_beacon: Optional[Beacon],
                       sensed: Sequence[float], th2: float) -> Relay:
    if own_beacon is None:
        return Relay.FORWARD
    claims_false = alert.event_value == 0
    return Relay.FORWARD if sensor_disagrees(sensed, own_beacon, th2) == claims_false else Relay.DROP


def majority_verdict(index: int, reports: Mapping[NodeId, int], adjacent_count: int) -> BeaconVerdict:
    """Vehicle consensus on one beacon from the latest value each reporter sent."""
    if not reports:
        return BeaconVerdict(index, 1, adjacent_count)
    invalid = sum(1 for v in reports.values() if v == 0)
    value = 0 if invalid > len(reports) / 2 else 1
    return BeaconVerdict(index, value, len(reports))


def beacon_verdict(index: int, beacon: Beacon, alerts: Iterable[TrafficAlert], adjacent_count: int,
                   thresholds: ContentThresholds, estimate: Optional[Mapping[str, float]] = None,
                   location_radius: float = 10.0) -> BeaconVerdict:
    claimed = {"speed": beacon.speed_avg, "density": beacon.density}
    if not verify_speed_density(estimate, claimed, thresholds.th1):
        return BeaconVerdict(index, 0, adjacent_count)
    latest: dict = {}
    for a in alerts:
        if a.event_type != EventType.IGNORE_RSU:
            continue
        if abs(a.timestamp - beacon.timestamp) > thresholds.th3:
            continue
        if a.location.distance(beacon.position) > location_radius:
            continue
        prev = latest.get(a.sender_id)
        if prev is None or a.timestamp >= prev.timestamp:
            latest[a.sender_id] = a
    return majority_verdict(index, {s: a.event_value for s, a in latest.items()}, adjacent_count)


def verdict_weights(verdicts: Sequence[BeaconVerdict]) -> List[float]:
    total = sum(v.weight_count for v in verdicts)
    if total == 0:
        return [1.0 / len(verdicts)] * len(verdicts)
    return [v.weight_count / total for v in verdicts]


def trust_beacon(verdicts: Sequence[BeaconVerdict]) -> float:
    if not verdicts:
        return NEUTRAL
    # integer sums keep a unanimous window at exactly 1
    total = sum(v.weight_count for v in verdicts)
    if total == 0:
        return sum(v.value for v in verdicts) / len(verdicts)
    return sum(v.weight_count for v in verdicts if v.value) / total


def window_beacon_trust(flooded: bool, verdicts: Callable[[], Sequence[BeaconVerdict]]) -> float:
    """A flooding window scores 0 whatever the content; verdicts are only built when needed."""
    if flooded:
        return 0.0
    return trust_beacon(verdicts())
