"""Property suites for the pure parts of every module, run by hypothesis."""
import math

from hypothesis import assume, given
from hypothesis import strategies as st

from rsutrust.aggregate import (DirectTrustInputs, hiding_correction, hiding_weight, q_update, threshold_update,
                                trust_direct)
from rsutrust.alert_trust import trust_alert, window_alert_trust
from rsutrust.beacon_trust import (BeaconVerdict, majority_verdict, trust_beacon, verdict_weights,
                                   window_beacon_trust)
from rsutrust.config import emit_config, parse_config, preset
from rsutrust.engine import Action, EventQueue
from rsutrust.metrics import ConfusionCounts, detection_metrics
from rsutrust.model import DataPacket, EventType, Position, TrafficAlert, one_hop_neighbors, packet_digest, rsu_id, \
    vehicle_id
from rsutrust.sweep import SWEEP_COLUMNS, aggregate, CellResult
from rsutrust.watchdog import RoutingObservation, WatchdogBuffer, trust_routing

unit = st.floats(0.0, 1.0, allow_nan=False)
coord = st.floats(-5000.0, 5000.0, allow_nan=False)
counts = st.integers(0, 10_000)


# ------------------------------------------------------------------ core model

@given(st.lists(st.tuples(coord, coord), min_size=2, max_size=12), st.floats(1.0, 3000.0))
def test_neighbor_relation_symmetric(points, rng):
    topo = {rsu_id(i): Position(x, y) for i, (x, y) in enumerate(points)}
    nbrs = {n: one_hop_neighbors(n, topo, rng) for n in topo}
    for a in topo:
        for b in nbrs[a]:
            assert a in nbrs[b]


@given(st.binary(min_size=1, max_size=64), st.binary(min_size=1, max_size=64))
def test_distinct_payloads_distinct_digests(a, b):
    assume(a != b)
    pa = DataPacket(1, rsu_id(0), rsu_id(1), a, b"", 0, 0.0)
    pb = DataPacket(1, rsu_id(0), rsu_id(1), b, b"", 0, 0.0)
    assert packet_digest(pa) != packet_digest(pb)


# ------------------------------------------------------------------ engine

@given(st.lists(st.tuples(st.floats(0.0, 100.0), st.booleans()), min_size=1, max_size=40))
def test_clock_never_goes_back(plan):
    """Events may schedule follow-ups; the processed times never decrease."""
    q = EventQueue()
    seen = []

    def handler(now, extra):
        seen.append(now)
        if extra is not None:
            q.schedule(now + extra, Action.DELIVER, None)

    for t, chain in plan:
        q.schedule(t, Action.DELIVER, 0.5 if chain else None)
    q.run_until(1000.0, {Action.DELIVER: handler})
    assert seen == sorted(seen)
    assert len(seen) == len(plan) + sum(1 for _, c in plan if c)


# ------------------------------------------------------------------ watchdog

@given(st.lists(st.sampled_from(["intact", "modified", "silent", "intact_then_timeout"]), max_size=60))
def test_one_outcome_per_forwarded_packet(outcomes):
    wd = WatchdogBuffer(rsu_id(0))
    hop = rsu_id(1)
    results = 0
    for pid, outcome in enumerate(outcomes):
        pkt = DataPacket(pid, rsu_id(0), rsu_id(2), b"data", b"", 0, 0.0)
        wd.on_forward_to_next_hop(pkt, hop, 0.0, 0.002)
        if outcome.startswith("intact"):
            results += wd.on_overhear(pkt, hop, 0.001) is not None
        elif outcome == "modified":
            bad = DataPacket(pid, rsu_id(0), rsu_id(2), b"dbta", b"", 0, 0.0)
            results += wd.on_overhear(bad, hop, 0.001) is not None
        if outcome in ("silent", "intact_then_timeout"):
            results += wd.on_timeout(pid, 0.002) is not None
    obs = wd.observation(hop)
    modified = outcomes.count("modified")
    assert results == len(outcomes)
    assert obs.pf + obs.pd + modified == len(outcomes)
    assert obs.pm == (0 if modified else 1)


@given(counts, counts, st.integers(0, 1))
def test_routing_trust_bounded_and_monotone(pf, pd, pm):
    t = trust_routing(RoutingObservation(rsu_id(1), pf, pd, pm))
    assert 0.0 <= t <= 1.0
    if pf + pd > 0:
        assert trust_routing(RoutingObservation(rsu_id(1), pf + 1, pd, pm)) >= t


# ------------------------------------------------------------------ beacon trust

verdicts = st.lists(st.builds(BeaconVerdict, st.integers(0, 100), st.integers(0, 1), st.integers(0, 200)),
                    min_size=1, max_size=40)


@given(verdicts)
def test_beacon_weights_sum_to_one(vs):
    assert abs(sum(verdict_weights(vs)) - 1.0) <= 1e-9


@given(verdicts)
def test_beacon_trust_is_weighted_acceptance(vs):
    t = trust_beacon(vs)
    assert 0.0 <= t <= 1.0
    total = sum(v.weight_count for v in vs)
    if total:
        want = sum(v.weight_count for v in vs if v.value == 1) / total
    else:
        want = sum(v.value for v in vs) / len(vs)
    assert abs(t - want) <= 1e-9


@given(verdicts)
def test_flooding_overrides_content(vs):
    assert window_beacon_trust(True, lambda: vs) == 0.0
    assert window_beacon_trust(False, lambda: vs) == trust_beacon(vs)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=50), st.integers(0, 100))
def test_honest_majority_accepts(values, adjacent):
    reports = {vehicle_id(i): v for i, v in enumerate(values)}
    verdict = majority_verdict(0, reports, adjacent)
    if 2 * sum(values) > len(values):
        assert verdict.value == 1
    assert verdict.weight_count == len(values)


@given(st.lists(st.builds(BeaconVerdict, st.integers(0, 100), st.just(1), st.integers(0, 200)), min_size=1))
def test_all_valid_beacons_give_full_trust(vs):
    assert abs(trust_beacon(vs) - 1.0) <= 1e-9


# ------------------------------------------------------------------ alert trust

SPOT = Position(1000.0, 1000.0)


def _alert(sender, kind, value, dx, dy, t):
    where = Position(SPOT.x + dx, SPOT.y + dy)
    return TrafficAlert(sender, where, t, EventType(kind), value, where)


alert_fields = st.tuples(st.integers(0, 1), st.integers(0, 1), st.floats(-15, 15), st.floats(-15, 15),
                         st.floats(-10, 10))


@given(st.one_of(st.none(), alert_fields), st.lists(alert_fields, max_size=15))
def test_alert_trust_is_a_deterministic_bit(rsu, vehicles):
    ra = _alert(rsu_id(0), *rsu[:4], 100.0 + rsu[4]) if rsu else None
    vs = [_alert(vehicle_id(i), k, v, dx, dy, 100.0 + dt) for i, (k, v, dx, dy, dt) in enumerate(vehicles)]
    a = trust_alert(ra, vs)
    assert a in (0, 1)
    assert trust_alert(ra, vs) == a


@given(st.integers(0, 1), st.integers(0, 1), st.lists(st.floats(0.0, 1e4), min_size=1, max_size=15))
def test_later_vehicle_alerts_always_within_time_limit(kind, value, delays):
    ra = _alert(rsu_id(0), kind, value, 0, 0, 100.0)
    vs = [_alert(vehicle_id(i), kind, value, 0, 0, 100.0 + d) for i, d in enumerate(delays)]
    assert trust_alert(ra, vs, th=5.0) == 1


@given(st.integers(0, 1), st.lists(st.tuples(st.floats(-7, 7), st.floats(-7, 7), st.floats(0, 5)), min_size=1,
                                   max_size=15))
def test_honest_event_reports_are_trusted(kind, reports):
    ra = _alert(rsu_id(0), kind, 1, 0, 0, 100.0)
    vs = [_alert(vehicle_id(i), kind, 1, dx, dy, 100.0 - back) for i, (dx, dy, back) in enumerate(reports)]
    assert window_alert_trust([ra], vs) == 1


# ------------------------------------------------------------------ aggregation

@given(unit, unit, unit, st.floats(0.05, 10.0))
def test_hiding_keeps_weights_normalised(w1, tr, tb, tn):
    a, b = hiding_correction(w1, 1.0 - w1, tr, tb, tn)
    assert abs(a + b - 1.0) <= 1e-9


@given(unit, unit, st.integers(0, 1), counts, counts)
def test_direct_trust_bounded_and_vetoed(tr, tb, ta, fr, fb):
    t = trust_direct(DirectTrustInputs(tr, tb, ta, fr, fb))
    assert 0.0 <= t <= 1.0
    if ta == 0:
        assert t == 0.0


@given(st.floats(0.5, 1.0))
def test_hiding_weight_below_uncorrected(b):
    w = hiding_weight(b, 1.0)
    assert 0.0 <= w < b
    assert w <= 0.5 * math.exp(-0.5) + 1e-12


@given(st.floats(0.5, 1.0), unit, unit)
def test_threshold_stays_in_upper_half(th_old, old, new):
    assert 0.5 <= threshold_update(th_old, old, new) <= 1.0


@given(unit, unit, unit, unit)
def test_q_update_monotone(q, r, avg, bump):
    base = q_update(q, r, avg)
    assert q_update(q, min(1.0, r + bump), avg) >= base
    assert q_update(q, r, min(1.0, avg + bump)) >= base
    assert 0.0 <= base <= 1.0


# ------------------------------------------------------------------ metrics

@given(counts, counts, counts, counts)
def test_detection_metrics_bounded_and_consistent(tp, fp, tn, fn):
    c = ConfusionCounts(tp, fp, tn, fn)
    m = detection_metrics(c)
    for v in m.values():
        assert v is None or 0.0 <= v <= 1.0
    if c.total:
        assert abs(m["accuracy"] - (1 - (fp + fn) / c.total)) <= 1e-12


# ------------------------------------------------------------------ config and results

config_changes = st.fixed_dictionaries({
    "mr": unit, "mv": unit, "protocol": st.sampled_from(["reactive", "proactive_ls", "proactive_dv"]),
    "trust_filter": st.booleans(), "pkt_rate": st.floats(0.01, 50.0), "alpha": st.floats(0.01, 1.0),
    "th1": st.floats(0.001, 1.0), "seed": st.integers(0, 2 ** 31),
})


@given(config_changes)
def test_config_round_trip(changes):
    cfg = preset("desk").replace(**changes)
    assert parse_config(emit_config(cfg)) == cfg


@given(st.lists(st.integers(0, 10 ** 6), min_size=1, max_size=12, unique=True),
       st.lists(st.one_of(st.none(), unit), min_size=1, max_size=12))
def test_every_row_carries_the_seed_hash(seeds, values):
    runs = [{"fpr": values[i % len(values)]} for i in range(len(seeds))]
    rows = aggregate([CellResult(0.2, 0.1, "reactive", False, seeds, runs)], ["fpr"])
    assert all(len(r["seed_hash"]) == 16 for r in rows)
    assert set(rows[0]) <= set(SWEEP_COLUMNS)
