import pytest

from rsutrust.config import ConfigError, ScenarioConfig, coerce_key, emit_config, load_config, parse_config, preset


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    s = cfg.scenario
    assert (s.n_rsus, s.n_vehicles, s.area_side, s.sim_duration, s.window) == (25, 500, 14000, 1200, 60)
    assert (s.rsu_range, s.vehicle_range, s.rsu_spacing, s.iterations) == (900, 250, 900, 10)


def test_out_of_range_fraction():
    with pytest.raises(ConfigError) as err:
        parse_config("MR = 1.5")
    assert any("mr" in p for p in err.value.problems)


def test_desk_grid_from_two_keys():
    cfg = parse_config("n_rsus = 9\nrsu_spacing = 900\narea_side = 3600")
    assert cfg.scenario.n_rsus == 9


def test_every_problem_reported():
    with pytest.raises(ConfigError) as err:
        parse_config("mr = 2\nmv = -1\nbogus = 3")
    assert len(err.value.problems) == 3


def test_unknown_section():
    with pytest.raises(ConfigError):
        parse_config("[nope]\nmr = 0.1")


def test_key_in_wrong_section():
    with pytest.raises(ConfigError):
        parse_config("[routing]\nmr = 0.1")


def test_aliases():
    cfg = parse_config("T_H1 = 0.2\nZ = 4")
    assert cfg.thresholds.th1 == 0.2 and cfg.scenario.history_slots == 4


def test_round_trip():
    cfg = preset("desk").replace(mr=0.4, protocol="proactive_dv", trust_filter=True)
    assert parse_config(emit_config(cfg)) == cfg


def test_load_from_file(tmp_path):
    path = tmp_path / "s.ini"
    path.write_text("[adversary]\nmr = 0.2\n")
    assert load_config(str(path)).adversary.mr == 0.2


def test_presets():
    assert preset("full").scenario.n_rsus == 25
    assert preset("desk").scenario.n_vehicles == 120
    with pytest.raises(ConfigError):
        preset("missing")


def test_replace_validates():
    with pytest.raises(ConfigError):
        ScenarioConfig().replace(protocol="flooding")
    with pytest.raises(ConfigError):
        ScenarioConfig().replace(nonsense=1)


def test_coerce_key():
    assert coerce_key("MR", "0.4") == ("mr", 0.4)
    assert coerce_key("trust_filter", "true") == ("trust_filter", True)
    with pytest.raises(ConfigError):
        coerce_key("n_rsus", "many")
