from rsutrust.alert_trust import AlertPool, group_by_event, trust_alert, vehicle_relay_event_alert, window_alert_trust
from rsutrust.beacon_trust import Relay
from rsutrust.model import EventType, Position, TrafficAlert, rsu_id, vehicle_id

SPOT = Position(500.0, 500.0)


def _alert(sender, value=1, t=100.0, where=SPOT, kind=EventType.ACCIDENT):
    return TrafficAlert(sender, where, t, kind, value, where)


def _vehicles(matches, others):
    out = [_alert(vehicle_id(i), 1, 98.0) for i in range(matches)]
    out += [_alert(vehicle_id(100 + i), 0, 98.0) for i in range(others)]
    return out


def test_relay_plurality():
    assert vehicle_relay_event_alert([1, 1, 1, 0]) == (Relay.FORWARD, 1)


def test_relay_tie_dropped():
    assert vehicle_relay_event_alert([1, 1, 0, 0]) == (Relay.DROP, None)


def test_observer_forwards_what_it_sensed():
    assert vehicle_relay_event_alert([1, 1, 1], observer=True, sensed_value=0) == (Relay.FORWARD, 0)


def test_alert_trust_majority_agrees():
    assert trust_alert(_alert(rsu_id(0)), _vehicles(2, 1)) == 1


def test_alert_trust_tie_is_untrusted():
    assert trust_alert(_alert(rsu_id(0)), _vehicles(2, 2)) == 0


def test_alert_trust_no_vehicle_alerts():
    assert trust_alert(_alert(rsu_id(0)), []) == 0


def test_missing_rsu_alert():
    assert trust_alert(None, _vehicles(1, 0)) == 0
    assert trust_alert(None, []) == 1


def test_match_needs_location_and_time():
    far = _alert(vehicle_id(1), 1, 98.0, Position(520.0, 500.0))
    old = _alert(vehicle_id(2), 1, 90.0)
    assert trust_alert(_alert(rsu_id(0)), [far, old, _alert(vehicle_id(3), 1, 98.0)]) == 0


def test_vehicle_alert_exactly_at_time_limit_matches():
    assert trust_alert(_alert(rsu_id(0)), [_alert(vehicle_id(1), 1, 95.0)]) == 1


def test_group_by_event_splits_on_place_and_type():
    a = _alert(vehicle_id(0))
    b = _alert(vehicle_id(1), where=Position(505.0, 500.0))
    c = _alert(vehicle_id(2), where=Position(900.0, 500.0))
    d = _alert(vehicle_id(3), kind=EventType.BAD_ROAD)
    assert [len(g) for g in group_by_event([a, b, c, d])] == [2, 1, 1]


def test_window_alert_trust_nothing_to_judge():
    assert window_alert_trust([], []) == 1


def test_window_alert_trust_unreported_event_is_a_failure():
    assert window_alert_trust([], _vehicles(3, 0)) == 0


def test_window_alert_trust_corroborated():
    assert window_alert_trust([_alert(rsu_id(0))], _vehicles(3, 1)) == 1


def test_window_alert_trust_contradicted():
    assert window_alert_trust([_alert(rsu_id(0), value=0)], _vehicles(3, 0)) == 0


def test_window_alert_trust_skips_uncorroborated_rsu_alerts():
    assert window_alert_trust([_alert(rsu_id(0))], []) == 1
    assert window_alert_trust([_alert(rsu_id(0))], [], skip_uncorroborated=False) == 0


def test_pool_keeps_latest_per_sender_and_event():
    pool = AlertPool.empty()
    pool.add_vehicle_alert(_alert(vehicle_id(0), 1, 10.0))
    pool.add_vehicle_alert(_alert(vehicle_id(0), 0, 12.0))
    pool.add_vehicle_alert(_alert(vehicle_id(0), 1, 11.0))
    assert [a.event_value for a in pool.vehicle.values()] == [0]
