"""Hand-check oracles: each trust formula re-evaluated directly (exact fractions where possible)
and compared with the package implementation on random valid inputs."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple

from .aggregate import DirectTrustInputs, frequency_weights, hiding_weight, q_update, threshold_update, trust_direct
from .alert_trust import trust_alert
from .beacon_trust import BeaconVerdict, trust_beacon, weighted_average_rate
from .model import EventType, Position, TrafficAlert, rsu_id, vehicle_id
from .watchdog import RoutingObservation, expected_forward_time, trust_routing

TOLERANCE = 1e-9


@dataclass
class OracleReport:
    name: str
    cases: int
    max_error: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _frac(x: float) -> Fraction:
    return Fraction(x)


# ---------------------------------------------------------------- direct evaluations

def oracle_routing(pf: int, pd: int, pm: int) -> Fraction:
    if pf + pd == 0:
        return Fraction(1, 2)
    return Fraction(pf, pf + pd) * pm


def oracle_expected_time(length: float, rate: float, distance: float, v: float, other: float) -> Fraction:
    return _frac(length) / _frac(rate) + _frac(distance) / _frac(v) + _frac(other)


def oracle_beacon(xs: Sequence[int], values: Sequence[int]) -> Fraction:
    if not xs:
        return Fraction(1, 2)
    total = sum(xs)
    if total == 0:
        return Fraction(sum(values), len(values))
    return sum((Fraction(x, total) * b for x, b in zip(xs, values)), Fraction(0))


def oracle_weights(f_routing: float, f_beacon: float) -> Tuple[Fraction, Fraction]:
    fr, fb = _frac(f_routing), _frac(f_beacon)
    return fr / (fr + fb), fb / (fr + fb)


def oracle_hiding(w1: float, w2: float, t: float) -> float:
    b = w1 if w1 >= w2 else w2
    a = 1 - b
    return a * t * math.exp(-(b * t))


def oracle_direct(tr: float, tb: float, ta: float, f_routing: float, f_beacon: float, t: float) -> float:
    if f_routing + f_beacon == 0:
        return 0.5 * ta
    w1, w2 = (float(v) for v in oracle_weights(f_routing, f_beacon))
    if tb < 0.5 and w1 >= w2:
        w1 = oracle_hiding(w1, w2, t)
        w2 = 1 - w1
    elif tr < 0.5 and w2 >= w1:
        w2 = oracle_hiding(w1, w2, t)
        w1 = 1 - w2
    value = (w1 * tr + w2 * tb) * ta
    return min(1.0, max(0.0, value))


def oracle_q(q_old: float, r: float, avg: float, alpha: float, gamma: float) -> Fraction:
    q, a, g = _frac(q_old), _frac(alpha), _frac(gamma)
    value = a * q * (_frac(r) + g * _frac(avg)) + (1 - a) * q
    return min(Fraction(1), max(Fraction(0), value))


def oracle_threshold(th_old: float, trust_old: float, trust_new: float) -> Fraction:
    beta = _frac(trust_old) - _frac(trust_new)
    if beta > 0:
        return min(Fraction(1), beta + Fraction(1, 2))
    if beta == 0:
        return _frac(th_old)
    return Fraction(1, 2)


def oracle_bavg(counts: Sequence[int]) -> Fraction:
    z = len(counts)
    return sum((Fraction(t, z) * b for t, b in zip(range(1, z + 1), counts)), Fraction(0))


def oracle_alert(rsu: Tuple[int, int, float, float, float] | None,
                 vehicles: Sequence[Tuple[int, int, float, float, float]], th: float, radius: float) -> int:
    """Alerts as (type, value, x, y, ts). Y counts full matches, N the rest."""
    if rsu is None:
        return 0 if vehicles else 1
    y = n = 0
    for kind, value, x, yy, ts in vehicles:
        close = math.hypot(x - rsu[2], yy - rsu[3]) <= radius
        if kind == rsu[0] and value == rsu[1] and close and rsu[4] - ts <= th:
            y += 1
        else:
            n += 1
    return 1 if y > n else 0


# ---------------------------------------------------------------- random comparisons

def _compare(name: str, cases: int, draw: Callable[[random.Random], Tuple[float, float]],
             rng: random.Random, tol: float) -> OracleReport:
    worst, bad = 0.0, 0
    for _ in range(cases):
        got, want = draw(rng)
        err = abs(float(got) - float(want))
        worst = max(worst, err)
        if not err <= tol:
            bad += 1
    return OracleReport(name, cases, worst, bad)


def _routing(rng: random.Random):
    pf, pd, pm = rng.randint(0, 500), rng.randint(0, 500), rng.randint(0, 1)
    return trust_routing(RoutingObservation(rsu_id(0), pf, pd, pm)), oracle_routing(pf, pd, pm)


def _expected(rng: random.Random):
    args = (rng.uniform(8, 1e5), rng.uniform(1e5, 1e8), rng.uniform(0, 2000), rng.uniform(1e7, 3e8),
            rng.uniform(0, 0.01))
    return expected_forward_time(*args), oracle_expected_time(*args)


def _beacon(rng: random.Random):
    n = rng.randint(1, 30)
    xs = [rng.randint(0, 60) for _ in range(n)]
    vals = [rng.randint(0, 1) for _ in range(n)]
    got = trust_beacon([BeaconVerdict(i, v, x) for i, (x, v) in enumerate(zip(xs, vals))])
    return got, oracle_beacon(xs, vals)


def _weights(rng: random.Random):
    fr, fb = rng.randint(0, 400), rng.randint(0, 400)
    if fr + fb == 0:
        fb = 1
    w1, w2 = frequency_weights(fr, fb)
    o1, o2 = oracle_weights(fr, fb)
    return max(abs(w1 - o1), abs(w2 - o2)), 0.0


def _hiding(rng: random.Random):
    w1 = rng.random()
    t = rng.choice([1.0, rng.uniform(0.1, 120.0)])
    b = max(w1, 1 - w1)
    return hiding_weight(b, t), oracle_hiding(w1, 1 - w1, t)


def _direct(rng: random.Random):
    tr = rng.choice([0.5, rng.random()])
    tb = rng.random()
    ta = rng.randint(0, 1)
    fr, fb = rng.randint(0, 300), rng.randint(0, 300)
    t = 1.0
    got = trust_direct(DirectTrustInputs(tr, tb, ta, fr, fb, 60.0), t)
    return got, oracle_direct(tr, tb, ta, fr, fb, t)


def _q(rng: random.Random):
    q, r, avg = rng.random(), rng.random(), rng.random()
    return q_update(q, r, avg, 0.7, 0.9), oracle_q(q, r, avg, 0.7, 0.9)


def _threshold(rng: random.Random):
    th = rng.uniform(0.5, 1.0)
    old = rng.random()
    new = old if rng.random() < 0.1 else rng.random()
    return threshold_update(th, old, new), oracle_threshold(th, old, new)


def _bavg(rng: random.Random):
    z = rng.randint(1, 10)
    counts = [rng.randint(0, 300) for _ in range(z)]
    return weighted_average_rate(counts), oracle_bavg(counts)


def _alert(rng: random.Random):
    cx, cy, now = rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(10, 100)
    rsu = None
    if rng.random() > 0.1:
        rsu = (rng.randint(0, 1), rng.randint(0, 1), cx, cy, now)
    vehicles = []
    for _ in range(rng.randint(0, 12)):
        vehicles.append((rng.randint(0, 1), rng.randint(0, 1), cx + rng.uniform(-14, 14), cy + rng.uniform(-14, 14),
                         now - rng.uniform(-2, 8)))

    def alert(sender, a):
        return TrafficAlert(sender, Position(0.0, 0.0), a[4], EventType(a[0]), a[1], Position(a[2], a[3]))

    got = trust_alert(alert(rsu_id(0), rsu) if rsu else None,
                      [alert(vehicle_id(i), v) for i, v in enumerate(vehicles)], 5.0, 10.0)
    return got, oracle_alert(rsu, vehicles, 5.0, 10.0)


CHECKS: Dict[str, Callable[[random.Random], Tuple[float, float]]] = {
    "routing_trust": _routing,
    "expected_forward_time": _expected,
    "beacon_trust": _beacon,
    "frequency_weights": _weights,
    "hiding_weight": _hiding,
    "direct_trust": _direct,
    "q_update": _q,
    "threshold_update": _threshold,
    "flooding_average": _bavg,
    "alert_trust": _alert,
}


def run_oracles(cases: int = 1000, seed: int = 0, tol: float = TOLERANCE) -> List[OracleReport]:
    out = []
    for k, (name, draw) in enumerate(CHECKS.items()):
        out.append(_compare(name, cases, draw, random.Random(seed * 1000 + k), tol))
    return out
