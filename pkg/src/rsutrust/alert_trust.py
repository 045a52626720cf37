"""Traffic-alert relaying by vehicles and the RSU-side alert consistency check."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .beacon_trust import Relay
from .model import EventType, TrafficAlert

DEFAULT_TH = 5.0
LOCATION_RADIUS = 10.0


def vehicle_relay_event_alert(copies: Sequence[int], observer: bool = False,
                              sensed_value: Optional[int] = None) -> Tuple[Relay, Optional[int]]:
    """Observers pass on what they sensed; others pass on the plurality value, dropping ties."""
    if observer:
        return Relay.FORWARD, sensed_value
    ones = sum(1 for c in copies if c == 1)
    zeros = len(copies) - ones
    if ones == zeros:
        return Relay.DROP, None
    return Relay.FORWARD, 1 if ones > zeros else 0


def same_place(a: TrafficAlert, b: TrafficAlert, radius: float = LOCATION_RADIUS) -> bool:
    return a.location.distance(b.location) <= radius


def trust_alert(rsu_alert: Optional[TrafficAlert], vehicle_alerts: Sequence[TrafficAlert],
                th: float = DEFAULT_TH, radius: float = LOCATION_RADIUS) -> int:
    """1 when strictly more vehicle alerts agree with the RSU's alert than disagree."""
    if rsu_alert is None:
        return 0 if vehicle_alerts else 1
    agree = disagree = 0
    for m in vehicle_alerts:
        if (m.event_type == rsu_alert.event_type and m.event_value == rsu_alert.event_value
                and same_place(m, rsu_alert, radius) and rsu_alert.timestamp - m.timestamp <= th):
            agree += 1
        else:
            disagree += 1
    return 1 if agree > disagree else 0


@dataclass
class AlertPool:
    """One observer's alerts for the current window."""

    vehicle: Dict[tuple, TrafficAlert]
    rsu: List[TrafficAlert]

    @classmethod
    def empty(cls) -> "AlertPool":
        return cls({}, [])

    def add_vehicle_alert(self, alert: TrafficAlert) -> None:
        key = (alert.sender_id, alert.event_type, round(alert.location.x, 1), round(alert.location.y, 1))
        prev = self.vehicle.get(key)
        if prev is None or alert.timestamp >= prev.timestamp:
            self.vehicle[key] = alert

    def add_rsu_alert(self, alert: TrafficAlert) -> None:
        self.rsu.append(alert)


def group_by_event(alerts: Sequence[TrafficAlert], radius: float = LOCATION_RADIUS) -> List[List[TrafficAlert]]:
    groups: List[List[TrafficAlert]] = []
    for a in alerts:
        for g in groups:
            if g[0].event_type == a.event_type and same_place(g[0], a, radius):
                g.append(a)
                break
        else:
            groups.append([a])
    return groups


def window_alert_trust(rsu_alerts: Sequence[TrafficAlert], vehicle_alerts: Sequence[TrafficAlert],
                       th: float = DEFAULT_TH, radius: float = LOCATION_RADIUS,
                       skip_uncorroborated: bool = True) -> int:
    """Minimum per-event alert trust over a window; 1 when there was nothing to judge.

    With `skip_uncorroborated`, an RSU alert that no vehicle alert reached the
    observer about is not judged: the observer simply has no evidence.
    """
    result = 1
    groups = group_by_event([a for a in vehicle_alerts if a.event_type != EventType.IGNORE_RSU], radius)
    claimed = [False] * len(groups)
    for ra in rsu_alerts:
        matched: List[TrafficAlert] = []
        for gi, g in enumerate(groups):
            if g[0].event_type == ra.event_type and same_place(g[0], ra, radius):
                matched.extend(g)
                claimed[gi] = True
        if not matched and skip_uncorroborated:
            continue
        result = min(result, trust_alert(ra, matched, th, radius))
    if not all(claimed):
        result = 0
    return result
