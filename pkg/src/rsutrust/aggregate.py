"""Direct trust from the three components, Q-learning indirect trust, adaptive thresholds."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple

from .model import NodeId

INITIAL_TRUST = 0.5
INITIAL_THRESHOLD = 0.5
ALPHA = 0.7
GAMMA = 0.9


class Classification(enum.Enum):
    LEGITIMATE = "legitimate"
    COMPROMISED = "compromised"


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def frequency_weights(f_routing: float, f_beacon: float) -> Tuple[float, float]:
    total = f_routing + f_beacon
    if total <= 0:
        raise ValueError("weights are undefined when both frequencies are zero")
    w1 = f_routing / total
    return w1, 1.0 - w1


def hiding_weight(b: float, tn: float) -> float:
    return (1.0 - b) * tn * math.exp(-b * tn)


def hiding_correction(w1: float, w2: float, trust_routing: float, trust_beacon: float,
                      tn: float = 1.0) -> Tuple[float, float]:
    """Cut the weight of a dominant factor whose trust fell below one half."""
    if trust_beacon < 0.5 and w1 >= w2:
        w = hiding_weight(w1, tn)
        return w, 1.0 - w
    if trust_routing < 0.5 and w2 >= w1:
        w = hiding_weight(w2, tn)
        return 1.0 - w, w
    return w1, w2


@dataclass(frozen=True)
class DirectTrustInputs:
    trust_routing: float
    trust_beacon: float
    trust_alert: float
    f_routing: float
    f_beacon: float
    window: float = 60.0


def combine(w1: float, w2: float, trust_routing: float, trust_beacon: float, trust_alert: float) -> float:
    return (w1 * trust_routing + w2 * trust_beacon) * trust_alert


def trust_direct(inputs: DirectTrustInputs, tn: float = 1.0) -> float:
    if inputs.f_routing + inputs.f_beacon <= 0:
        return INITIAL_TRUST * inputs.trust_alert
    w1, w2 = frequency_weights(inputs.f_routing, inputs.f_beacon)
    w1, w2 = hiding_correction(w1, w2, inputs.trust_routing, inputs.trust_beacon, tn)
    return clamp(combine(w1, w2, inputs.trust_routing, inputs.trust_beacon, inputs.trust_alert), 0.0, 1.0)


def q_update(q_old: float, reward: float, neighbor_avg: float,
             alpha: float = ALPHA, gamma: float = GAMMA) -> float:
    return clamp(alpha * q_old * (reward + gamma * neighbor_avg) + (1.0 - alpha) * q_old, 0.0, 1.0)


def threshold_update(th_old: float, trust_old: float, trust_new: float) -> float:
    beta = trust_old - trust_new
    if beta > 0:
        return clamp(beta + 0.5, 0.5, 1.0)
    if beta == 0:
        return th_old
    return 0.5


def classify(trust: float, threshold: float) -> Classification:
    return Classification.LEGITIMATE if trust > threshold else Classification.COMPROMISED


@dataclass
class QEntry:
    q: float = 0.0
    one_hop: bool = False
    bootstrapped: bool = False


@dataclass
class GossipedTable:
    owner: int
    window: int
    values: Dict[int, float]


class QTable:
    """Q-values for every RSU within the hop budget of the owner, plus gossiped neighbour tables."""

    def __init__(self, owner: int, hop_distance: Mapping[int, int], hop_budget: int = 6,
                 staleness: int = 3):
        self.owner = owner
        self.entries: Dict[int, QEntry] = {
            m: QEntry(one_hop=(d == 1)) for m, d in hop_distance.items() if 0 < d <= hop_budget
        }
        self.staleness = staleness
        self.received: Dict[int, GossipedTable] = {}

    def snapshot(self) -> Dict[int, float]:
        return {m: e.q for m, e in self.entries.items() if e.bootstrapped}

    def merge(self, table: GossipedTable) -> bool:
        """Keep the newest table per owner; returns True if it was new."""
        if table.owner == self.owner:
            return False
        prev = self.received.get(table.owner)
        if prev is not None and prev.window >= table.window:
            return False
        self.received[table.owner] = table
        return True

    def neighbor_average(self, subject: int, subject_neighbors: Iterable[int], window: int) -> Optional[float]:
        vals = []
        for v in subject_neighbors:
            if v == self.owner:
                e = self.entries.get(subject)
                if e is not None and e.bootstrapped:
                    vals.append(e.q)
                continue
            t = self.received.get(v)
            if t is None or window - t.window > self.staleness or subject not in t.values:
                continue
            vals.append(t.values[subject])
        if not vals:
            return None
        return sum(vals) / len(vals)

    def update(self, subject: int, reward: Optional[float], neighbor_avg: Optional[float],
               alpha: float = ALPHA, gamma: float = GAMMA) -> Optional[float]:
        """Apply one window's update. Returns the new Q or None when nothing is known yet."""
        e = self.entries[subject]
        if e.one_hop:
            if reward is None:
                return e.q if e.bootstrapped else None
            if not e.bootstrapped:
                e.q, e.bootstrapped = reward, True
            else:
                e.q = q_update(e.q, reward, neighbor_avg if neighbor_avg is not None else 0.0, alpha, gamma)
            return e.q
        if neighbor_avg is None:
            return e.q if e.bootstrapped else None
        if not e.bootstrapped:
            e.q, e.bootstrapped = neighbor_avg, True
        else:
            e.q = q_update(e.q, 0.0, neighbor_avg, alpha, gamma)
        return e.q


@dataclass
class TrustLedgerEntry:
    subject: int
    trust_direct: Optional[float] = None
    trust_indirect: Optional[float] = None
    trust_old: float = INITIAL_TRUST
    trust_new: float = INITIAL_TRUST
    th_old: float = INITIAL_THRESHOLD
    th_new: float = INITIAL_THRESHOLD
    classification: Optional[Classification] = None
    components: Dict[str, float] = field(default_factory=dict)

    def advance(self, trust: float) -> Classification:
        """Roll the window: new threshold from the trust change, then classify."""
        self.trust_old, self.th_old = self.trust_new, self.th_new
        self.trust_new = trust
        self.th_new = threshold_update(self.th_old, self.trust_old, trust)
        self.classification = classify(trust, self.th_new)
        return self.classification
