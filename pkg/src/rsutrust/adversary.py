"""Malicious RSU and vehicle behaviour driven by per-action probabilities."""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import BEACON_FIELDS, Beacon, DataPacket


class RelayAction(enum.Enum):
    FORWARD = "forward"
    FORWARD_MODIFIED = "forward_modified"
    DROP = "drop"


class VehicleAction(enum.Enum):
    HONEST = "honest"
    DROP = "drop"
    FLIP = "flip"
    FALSE_IGNORE = "false_ignore"


@dataclass(frozen=True)
class AdversaryProfile:
    mr: float = 0.0
    mv: float = 0.0
    rsu_drop_p: float = 0.5
    rsu_modify_p: float = 0.5
    rsu_flood_p: float = 0.5
    rsu_beacon_falsify_p: float = 0.5
    rsu_alert_alter_p: float = 0.5
    veh_false_ignore_p: float = 0.5
    veh_suppress_or_flip_p: float = 0.5
    veh_alert_modify_p: float = 0.5
    flood_factor: int = 5
    falsify_factor: float = 1.5

    def __post_init__(self) -> None:
        for name in ("mr", "mv", "rsu_drop_p", "rsu_modify_p", "rsu_flood_p", "rsu_beacon_falsify_p",
                     "rsu_alert_alter_p", "veh_false_ignore_p", "veh_suppress_or_flip_p",
                     "veh_alert_modify_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class Roles:
    malicious_rsus: frozenset
    malicious_vehicles: frozenset

    def rsu_mask(self, n: int) -> np.ndarray:
        return np.array([i in self.malicious_rsus for i in range(n)], dtype=bool)

    def vehicle_mask(self, n: int) -> np.ndarray:
        return np.array([i in self.malicious_vehicles for i in range(n)], dtype=bool)


def assign_roles(rng: np.random.Generator, n_rsus: int, n_vehicles: int, mr: float, mv: float) -> Roles:
    for name, v in (("MR", mr), ("MV", mv)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    k_r = int(round(mr * n_rsus))
    k_v = int(round(mv * n_vehicles))
    rsus = rng.choice(n_rsus, size=k_r, replace=False) if k_r else []
    vehicles = rng.choice(n_vehicles, size=k_v, replace=False) if k_v else []
    return Roles(frozenset(int(i) for i in rsus), frozenset(int(i) for i in vehicles))


def rsu_on_relay(profile: AdversaryProfile, rng: random.Random) -> RelayAction:
    # drop and modify are independent draws
    drop = rng.random() < profile.rsu_drop_p
    modify = rng.random() < profile.rsu_modify_p
    if drop:
        return RelayAction.DROP
    return RelayAction.FORWARD_MODIFIED if modify else RelayAction.FORWARD


def tamper_payload(packet: DataPacket, rng: random.Random) -> bytes:
    payload = bytearray(packet.immutable_payload)
    pos = rng.randrange(len(payload))
    payload[pos] ^= 1 << rng.randrange(8)
    return bytes(payload)


def decide_flooding(profile: AdversaryProfile, rng: random.Random) -> bool:
    """Whether a malicious RSU floods for the coming window."""
    return rng.random() < profile.rsu_flood_p


def falsify_beacon(profile: AdversaryProfile, rng: random.Random, beacon: Beacon,
                   th1: float, th2: float) -> Tuple[Beacon, Optional[str]]:
    """With the falsify probability, push one field past its tolerance by the falsify factor."""
    if rng.random() >= profile.rsu_beacon_falsify_p:
        return beacon, None
    name = BEACON_FIELDS[rng.randrange(len(BEACON_FIELDS))]
    tol = th1 if name in ("speed_avg", "density") else th2
    sign = 1.0 if rng.random() < 0.5 else -1.0
    if name == "humidity" and beacon.humidity * (1 + profile.falsify_factor * tol) > 100.0:
        sign = -1.0
    value = getattr(beacon, name) * (1.0 + sign * profile.falsify_factor * tol)
    fields = {f: getattr(beacon, f) for f in BEACON_FIELDS}
    fields[name] = value
    return Beacon(beacon.sender, beacon.position, beacon.timestamp, **fields), name


def rsu_on_beacon_tick(profile: AdversaryProfile, rng: random.Random, honest: Beacon, flooding: bool,
                       th1: float, th2: float, period: float) -> List[Beacon]:
    """Beacons a malicious RSU emits for one honest tick: a burst when flooding, each maybe falsified."""
    count = profile.flood_factor if flooding else 1
    out = []
    for k in range(count):
        b = honest if k == 0 else Beacon(honest.sender, honest.position, honest.timestamp + k * period / count,
                                         *(getattr(honest, f) for f in BEACON_FIELDS))
        out.append(falsify_beacon(profile, rng, b, th1, th2)[0])
    return out


def alter_alert_value(profile: AdversaryProfile, rng: random.Random, value: int) -> int:
    return 1 - value if rng.random() < profile.rsu_alert_alter_p else value


def vehicle_malicious_actions(profile: AdversaryProfile, rng: random.Random, context: str,
                              beacon_is_honest: bool = True) -> VehicleAction:
    """Scalar decision for one malicious vehicle.

    context is "relay_ignore", "beacon" (spontaneous reaction to an honest
    beacon) or "relay_event".
    """
    if context == "relay_ignore":
        if rng.random() < profile.veh_suppress_or_flip_p:
            return VehicleAction.DROP if rng.random() < 0.5 else VehicleAction.FLIP
        return VehicleAction.HONEST
    if context == "beacon":
        if beacon_is_honest and rng.random() < profile.veh_false_ignore_p:
            return VehicleAction.FALSE_IGNORE
        return VehicleAction.HONEST
    if context == "relay_event":
        return VehicleAction.FLIP if rng.random() < profile.veh_alert_modify_p else VehicleAction.HONEST
    raise ValueError(f"unknown context {context!r}")
