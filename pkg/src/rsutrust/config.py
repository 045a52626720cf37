"""Scenario configuration: sectioned key = value text, defaults, validation and round-trip emission."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields
from importlib import resources
from typing import Any, Dict, List, Tuple

PROTOCOLS = ("reactive", "proactive_ls", "proactive_dv")


class ConfigError(ValueError):
    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class ScenarioSection:
    area_side: float = 14000.0
    n_rsus: int = 25
    rsu_spacing: float = 900.0
    rsu_range: float = 900.0
    n_vehicles: int = 500
    vehicle_range: float = 250.0
    vehicle_speed: float = 20.0
    sim_duration: float = 1200.0
    window: float = 60.0
    history_slots: int = 5
    beacon_period: float = 1.0
    vehicle_beacon_period: float = 1.0
    seed: int = 1
    iterations: int = 10


@dataclass(frozen=True)
class ThresholdSection:
    th1: float = 0.10
    th2: float = 0.10
    th3: float = 2.0
    th_alert: float = 5.0
    location_radius: float = 10.0


@dataclass(frozen=True)
class TrustSection:
    alpha: float = 0.7
    gamma: float = 0.9
    normalize_bavg: bool = False
    raw_hiding_time: bool = False
    q_staleness: int = 3
    hop_budget: int = 6


@dataclass(frozen=True)
class AdversarySection:
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


@dataclass(frozen=True)
class RoutingSection:
    protocol: str = "reactive"
    trust_filter: bool = False
    vehicle_sources: int = 50
    rsu_sources: bool = True
    pkt_rate: float = 2.0
    packet_bytes: int = 512
    data_rate: float = 6e6
    retry_limit: int = 2
    t_other: float = 0.001
    processing_delay: float = 0.0005
    v2v_hop_delay: float = 0.002
    ls_interval: float = 5.0
    dv_interval: float = 15.0


@dataclass(frozen=True)
class EnvironmentSection:
    event_interval: float = 120.0
    sensing_radius: float = 100.0
    sensor_jitter: float = 0.005
    density_smoothing: float = 600.0
    spatial_variation: float = 0.01
    temporal_variation: float = 0.01


@dataclass(frozen=True)
class MetricsSection:
    scoring: str = "consensus"


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    thresholds: ThresholdSection = field(default_factory=ThresholdSection)
    trust: TrustSection = field(default_factory=TrustSection)
    adversary: AdversarySection = field(default_factory=AdversarySection)
    routing: RoutingSection = field(default_factory=RoutingSection)
    environment: EnvironmentSection = field(default_factory=EnvironmentSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)

    def replace(self, **changes: Any) -> "ScenarioConfig":
        """Override individual keys by name, e.g. cfg.replace(mr=0.4, protocol="proactive_ls")."""
        sections: Dict[str, Dict[str, Any]] = {}
        for key, value in changes.items():
            section = KEY_SECTION.get(key)
            if section is None:
                raise ConfigError([f"unknown key {key!r}"])
            sections.setdefault(section, {})[key] = value
        new = {name: dataclasses.replace(getattr(self, name), **vals) for name, vals in sections.items()}
        cfg = dataclasses.replace(self, **new)
        problems = validate(cfg)
        if problems:
            raise ConfigError(problems)
        return cfg


SECTIONS: Dict[str, type] = {
    "scenario": ScenarioSection, "thresholds": ThresholdSection, "trust": TrustSection,
    "adversary": AdversarySection, "routing": RoutingSection, "environment": EnvironmentSection,
    "metrics": MetricsSection,
}
KEY_SECTION: Dict[str, str] = {f.name: s for s, cls in SECTIONS.items() for f in fields(cls)}
ALIASES = {"z": "history_slots", "t": "window", "t_h1": "th1", "t_h2": "th2", "t_h3": "th3", "t_h": "th_alert"}

TOP = "__top__"


def _coerce(raw: str, kind: Any) -> Any:
    kind = {"int": int, "float": float, "bool": bool, "str": str}.get(kind, kind)
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind is int:
        return int(raw.strip())
    if kind is float:
        return float(raw.strip())
    return raw.strip()


def validate(cfg: ScenarioConfig) -> List[str]:
    p: List[str] = []
    s, th, tr, adv, r, env = cfg.scenario, cfg.thresholds, cfg.trust, cfg.adversary, cfg.routing, cfg.environment
    for name in ("area_side", "rsu_spacing", "rsu_range", "vehicle_range", "vehicle_speed",
                 "window", "beacon_period", "vehicle_beacon_period"):
        if not getattr(s, name) > 0:
            p.append(f"scenario.{name} must be positive")
    for name in ("n_rsus", "history_slots", "iterations"):
        if getattr(s, name) < 1:
            p.append(f"scenario.{name} must be at least 1")
    if s.n_vehicles < 0:
        p.append("scenario.n_vehicles must be non-negative")
    if s.sim_duration < 0:
        p.append("scenario.sim_duration must be non-negative")
    if s.n_rsus >= 1:
        side = int(round(s.n_rsus ** 0.5))
        if side * side != s.n_rsus:
            p.append("scenario.n_rsus must be a perfect square (RSUs form a square grid)")
        elif (side - 1) * s.rsu_spacing > s.area_side:
            p.append("scenario: the RSU grid does not fit inside area_side")
    for name in ("th1", "th2", "th3", "th_alert", "location_radius"):
        if not getattr(th, name) > 0:
            p.append(f"thresholds.{name} must be positive")
    for name in ("alpha", "gamma"):
        if not 0 < getattr(tr, name) <= 1:
            p.append(f"trust.{name} must lie in (0, 1]")
    if tr.q_staleness < 0:
        p.append("trust.q_staleness must be non-negative")
    if not 1 <= tr.hop_budget <= 6:
        p.append("trust.hop_budget must lie in [1, 6]")
    for f in fields(AdversarySection):
        if f.name in ("flood_factor", "falsify_factor"):
            continue
        v = getattr(adv, f.name)
        if not 0.0 <= v <= 1.0:
            p.append(f"adversary.{f.name} must lie in [0, 1], got {v}")
    if adv.flood_factor < 2:
        p.append("adversary.flood_factor must be at least 2")
    if not adv.falsify_factor > 1:
        p.append("adversary.falsify_factor must exceed 1")
    if r.protocol not in PROTOCOLS:
        p.append(f"routing.protocol must be one of {', '.join(PROTOCOLS)}")
    if r.vehicle_sources < 0 or r.vehicle_sources > s.n_vehicles:
        p.append("routing.vehicle_sources must lie in [0, n_vehicles]")
    for name in ("pkt_rate", "data_rate", "ls_interval", "dv_interval", "t_other"):
        if not getattr(r, name) > 0:
            p.append(f"routing.{name} must be positive")
    if r.packet_bytes < 32:
        p.append("routing.packet_bytes must be at least 32")
    if r.retry_limit < 0:
        p.append("routing.retry_limit must be non-negative")
    if not 0 <= r.processing_delay < r.t_other:
        p.append("routing.processing_delay must lie in [0, t_other)")
    if r.v2v_hop_delay < 0:
        p.append("routing.v2v_hop_delay must be non-negative")
    for name in ("event_interval", "sensing_radius", "density_smoothing"):
        if not getattr(env, name) > 0:
            p.append(f"environment.{name} must be positive")
    for name in ("sensor_jitter", "spatial_variation", "temporal_variation"):
        if not 0 <= getattr(env, name) < 0.05:
            p.append(f"environment.{name} must lie in [0, 0.05)")
    if cfg.metrics.scoring not in ("consensus", "pair"):
        p.append("metrics.scoring must be consensus or pair")
    return p


def parse_config(text: str) -> ScenarioConfig:
    """Parse config text; keys before any [section] header may name any known key."""
    parser = configparser.ConfigParser(interpolation=None, strict=False, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    problems: List[str] = []
    try:
        parser.read_string(f"[{TOP}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    values: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    for section in parser.sections():
        if section != TOP and section not in SECTIONS:
            problems.append(f"unknown section [{section}]")
            continue
        for raw_key, raw in parser.items(section):
            key = ALIASES.get(raw_key, raw_key)
            home = KEY_SECTION.get(key)
            if home is None:
                problems.append(f"unknown key {raw_key!r}")
                continue
            if section != TOP and home != section:
                problems.append(f"key {raw_key!r} belongs in [{home}], not [{section}]")
                continue
            kind = next(f.type for f in fields(SECTIONS[home]) if f.name == key)
            try:
                values[home][key] = _coerce(raw, kind)
            except ValueError as exc:
                problems.append(f"{home}.{key}: {exc}")
    # keys that parsed are still range-checked so every problem is reported at once
    cfg = ScenarioConfig(**{name: SECTIONS[name](**vals) for name, vals in values.items()})
    problems += validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: ScenarioConfig) -> str:
    lines: List[str] = []
    for name in SECTIONS:
        section = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in fields(section):
            lines.append(f"{f.name} = {_format(getattr(section, f.name))}")
        lines.append("")
    return "\n".join(lines)


def coerce_key(key: str, raw: str) -> Tuple[str, Any]:
    """Resolve an alias and convert a raw string to the key's declared type."""
    key = ALIASES.get(key.lower(), key.lower())
    section = KEY_SECTION.get(key)
    if section is None:
        raise ConfigError([f"unknown key {key!r}"])
    kind = next(f.type for f in fields(SECTIONS[section]) if f.name == key)
    try:
        return key, _coerce(raw, kind)
    except ValueError as exc:
        raise ConfigError([f"{section}.{key}: {exc}"]) from None


def load_config(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def preset(name: str) -> ScenarioConfig:
    """Built-in presets: full, desk."""
    try:
        text = resources.files("rsutrust.presets").joinpath(f"{name}.ini").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError([f"unknown preset {name!r}"]) from None
    return parse_config(text)


def flat_items(cfg: ScenarioConfig) -> List[Tuple[str, Any]]:
    return [(f.name, getattr(getattr(cfg, s), f.name)) for s in SECTIONS for f in fields(SECTIONS[s])]
