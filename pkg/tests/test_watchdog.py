import pytest

from rsutrust.model import DataPacket, rsu_id
from rsutrust.watchdog import RoutingObservation, WatchdogBuffer, expected_forward_time, trust_routing


def _pkt(pid=1, payload=b"payload"):
    return DataPacket(pid, rsu_id(0), rsu_id(2), payload, b"", 0, 0.0)


def test_expected_time_single_term():
    assert expected_forward_time(1000, 1e6, 0, 3e8, 0) == pytest.approx(0.001, abs=1e-15)


def test_expected_time_all_terms():
    # 1000/6e6 + 900/3e8 + 1e-3 = 1.6667e-4 + 3e-6 + 1e-3
    assert expected_forward_time(1000, 6e6, 900, 3e8, 1e-3) == pytest.approx(1.16967e-3, abs=1e-8)


def test_expected_time_processing_only():
    assert expected_forward_time(0, 6e6, 0, 3e8, 0.5) == 0.5


def test_expected_time_rejects_zero_rate():
    with pytest.raises(ValueError):
        expected_forward_time(1000, 0, 0, 3e8, 0)


def test_forward_sets_deadline():
    wd = WatchdogBuffer(rsu_id(0))
    assert wd.on_forward_to_next_hop(_pkt(), rsu_id(1), 10.0, 0.002) == pytest.approx(10.002)


def test_two_packets_two_entries():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)
    wd.on_forward_to_next_hop(_pkt(2), rsu_id(1), 0.0, 0.002)
    assert len(wd.entries) == 2


def test_duplicate_id_is_an_error():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)
    with pytest.raises(KeyError):
        wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)


def test_timeout_scheduler_called():
    calls = []
    wd = WatchdogBuffer(rsu_id(0), lambda pid, t: calls.append((pid, t)))
    wd.on_forward_to_next_hop(_pkt(4), rsu_id(1), 1.0, 0.5)
    assert calls == [(4, 1.5)]


def test_overhear_intact_counts_forward():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(), rsu_id(1), 0.0, 0.002)
    fwd = DataPacket(1, rsu_id(0), rsu_id(2), b"payload", b"hdr", 1, 0.0)
    assert wd.on_overhear(fwd, rsu_id(1), 0.001) is True
    obs = wd.observation(rsu_id(1))
    assert (obs.pf, obs.pd, obs.pm) == (1, 0, 1)
    assert not wd.entries


def test_overhear_modified_sets_pm():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(payload=b"\x00bc"), rsu_id(1), 0.0, 0.002)
    assert wd.on_overhear(_pkt(payload=b"\x01bc"), rsu_id(1), 0.001) is False
    obs = wd.observation(rsu_id(1))
    assert (obs.pf, obs.pm) == (0, 0)
    assert not wd.entries


def test_overhear_unknown_packet_changes_nothing():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)
    assert wd.on_overhear(_pkt(9), rsu_id(1), 0.001) is None
    assert len(wd.entries) == 1
    assert wd.observation(rsu_id(1)).pf == 0


def test_overhear_from_wrong_forwarder_ignored():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)
    assert wd.on_overhear(_pkt(1), rsu_id(3), 0.001) is None
    assert len(wd.entries) == 1


def test_timeout_counts_drop():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)
    assert wd.on_timeout(1, 0.002) == rsu_id(1)
    assert wd.observation(rsu_id(1)).pd == 1


def test_timeout_after_overhear_is_noop():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)
    wd.on_overhear(_pkt(1), rsu_id(1), 0.001)
    assert wd.on_timeout(1, 0.002) is None
    assert wd.observation(rsu_id(1)).pd == 0


def test_two_timeouts():
    wd = WatchdogBuffer(rsu_id(0))
    for pid in (1, 2):
        wd.on_forward_to_next_hop(_pkt(pid), rsu_id(1), 0.0, 0.002)
    wd.on_timeout(1, 0.002)
    wd.on_timeout(2, 0.002)
    assert wd.observation(rsu_id(1)).pd == 2


def test_window_reset():
    wd = WatchdogBuffer(rsu_id(0))
    wd.on_forward_to_next_hop(_pkt(1), rsu_id(1), 0.0, 0.002)
    wd.on_timeout(1, 0.002)
    wd.start_window(3)
    obs = wd.observation(rsu_id(1))
    assert (obs.pf, obs.pd, obs.pm, obs.window_id) == (0, 0, 1, 3)


@pytest.mark.parametrize("pf,pd,pm,want", [(7, 3, 1, 0.7), (100, 0, 0, 0.0), (0, 0, 1, 0.5), (0, 0, 0, 0.5)])
def test_trust_routing(pf, pd, pm, want):
    assert trust_routing(RoutingObservation(rsu_id(1), pf, pd, pm)) == pytest.approx(want, abs=1e-12)
