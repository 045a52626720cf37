"""Full scenario run: mobility, beacons, alerts, data traffic, watchdogs and per-window trust evaluation."""
from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

import numpy as np

from . import vehicles as vl
from .adversary import (AdversaryProfile, RelayAction, Roles, alter_alert_value, assign_roles,
                        decide_flooding, rsu_on_beacon_tick, rsu_on_relay, tamper_payload)
from .aggregate import Classification, DirectTrustInputs, GossipedTable, QTable, TrustLedgerEntry, trust_direct
from .alert_trust import AlertPool, group_by_event, window_alert_trust
from .beacon_trust import (BeaconRateHistory, BeaconVerdict, flooding_check, majority_verdict, verify_speed_density,
                           window_beacon_trust)
from .config import ConfigError, ScenarioConfig, validate
from .engine import SPEED_OF_LIGHT, Action, EventQueue, tx_delay
from .mobility import ManhattanMobility
from .model import (BEACON_FIELDS, ROAD_EVENTS, Beacon, DataPacket, EventType, GridTopology, GroundTruth, NodeKind,
                    Position, RoadEvent, TrafficAlert, hop_distances, make_payload, rsu_id, vehicle_id)
from .routing import LOCAL, make_router
from .watchdog import WatchdogBuffer, expected_forward_time, trust_routing

NOTIFY_DELAY = 0.1
CONTROL_BITS = 800  # beacons, alerts and route control frames
SAMPLE_HORIZON = 10.0  # seconds a carried speed/density sample stays usable


@dataclass
class NetworkCounters:
    injected: int = 0
    delivered: int = 0
    delivered_modified: int = 0
    delivered_bytes: int = 0
    dropped_malice: int = 0
    dropped_no_route: int = 0
    dropped_hop_budget: int = 0
    dropped_unreachable: int = 0
    retransmissions: int = 0
    latency_sum: float = 0.0
    latencies: List[float] = field(default_factory=list)

    @property
    def dropped(self) -> int:
        return self.dropped_malice + self.dropped_no_route + self.dropped_hop_budget + self.dropped_unreachable


@dataclass
class RunResult:
    config: ScenarioConfig
    seed: int
    malicious_rsus: List[int]
    malicious_vehicles: int
    neighbors: List[List[int]]
    final: Dict[Tuple[int, int], Optional[str]]
    series: List[tuple]
    network: NetworkCounters
    in_flight: int
    counters: Dict[str, int]
    paths: Optional[Dict[int, List[int]]] = None

    SERIES_COLUMNS = ("window", "evaluator", "subject", "one_hop", "trust_routing", "trust_beacon",
                      "trust_alert", "trust_direct", "trust_indirect", "threshold", "classification")


@dataclass
class Flow:
    source: Tuple[str, int]
    dest: Tuple[str, int]
    phase: float


class Simulation:
    def __init__(self, cfg: ScenarioConfig, seed: Optional[int] = None, trace_paths: bool = False,
                 roles: Optional[Roles] = None):
        problems = validate(cfg)
        if problems:
            raise ConfigError(problems)
        self.cfg = cfg
        s = cfg.scenario
        self.seed = s.seed if seed is None else seed
        streams = np.random.SeedSequence(self.seed).spawn(8)
        self.rng_roles = np.random.default_rng(streams[0])
        self.rng_mob = np.random.default_rng(streams[1])
        self.rng_traffic = np.random.default_rng(streams[2])
        self.rng_sense = np.random.default_rng(streams[3])
        rng_env = np.random.default_rng(streams[4])
        self.rng_rsu_adv = random.Random(int(streams[5].generate_state(1)[0]))
        self.rng_veh_adv = np.random.default_rng(streams[6])
        self.rng_events = np.random.default_rng(streams[7])

        self.grid = GridTopology.build(s.n_rsus, s.rsu_spacing, s.area_side, s.rsu_range)
        self.R = self.grid.n
        self.V = s.n_vehicles
        self.rsu_pos = self.grid.positions()
        self.rsu_positions = [Position(float(x), float(y)) for x, y in self.rsu_pos]
        self.nbrs = self.grid.radio_neighbors()
        self.near_rsu = np.zeros((self.grid.n, self.grid.n), dtype=bool)
        for p, row in enumerate(self.nbrs):
            self.near_rsu[p, row] = True
        self.hops = [hop_distances(self.nbrs, p) for p in range(self.R)]
        self.adv = AdversaryProfile(**{k: getattr(cfg.adversary, k) for k in cfg.adversary.__dataclass_fields__})
        self.roles = roles or assign_roles(self.rng_roles, self.R, self.V, self.adv.mr, self.adv.mv)
        self.bad_rsu = self.roles.rsu_mask(self.R)
        self.bad_veh = self.roles.vehicle_mask(self.V)

        degree = np.array([len(self.grid.road_neighbors(i)) for i in range(self.R)], dtype=float)
        region_km = np.maximum(degree, 1.0) * s.rsu_spacing / 2.0 / 1000.0
        env = cfg.environment
        self.truth = GroundTruth(rng_env, s.vehicle_speed, region_km, env.spatial_variation,
                                 env.temporal_variation, density_smoothing=env.density_smoothing)
        self.rsu_spatial = self.truth.spatial_terms(self.rsu_pos)
        self.mob = ManhattanMobility(self.grid, self.V, s.vehicle_speed, self.rng_mob) if self.V else None

        self.q = EventQueue()
        self.trace_paths = trace_paths
        self.paths: Dict[int, List[int]] = {}
        self.net = NetworkCounters()
        self.live: Set[int] = set()
        self.counters: Dict[str, int] = {
            "beacons_sent": 0, "beacons_falsified": 0, "ignore_floods": 0, "ignore_reports": 0,
            "road_events": 0, "road_events_unobserved": 0, "event_alerts": 0, "rsu_alerts": 0,
            "gossip_merges": 0, "windows": 0,
        }
        self._init_rsu_state()
        self._init_vehicle_state()
        self._init_traffic()

    # ------------------------------------------------------------------ setup
    def _init_rsu_state(self) -> None:
        R, cfg = self.R, self.cfg
        self.watchdog = [WatchdogBuffer(rsu_id(p), self._timeout_scheduler(p)) for p in range(R)]
        # each received beacon is kept with the observer's estimate at arrival
        self.beacons_rx: List[Dict[int, List[Tuple[Beacon, Optional[Dict[str, float]]]]]] = [
            {s: [] for s in self.nbrs[p]} for p in range(R)]
        self.history = [{s: BeaconRateHistory(cfg.scenario.history_slots) for s in self.nbrs[p]} for p in range(R)]
        self.reports: List[Dict[int, List[Tuple[float, Dict[int, int]]]]] = [
            {s: [] for s in self.nbrs[p]} for p in range(R)]
        self.est = np.zeros((R, R, 3))  # speed sum, density sum, samples over fresh carried samples
        self.pools = [AlertPool.empty() for _ in range(R)]
        self.deferred: List[List[TrafficAlert]] = [[] for _ in range(R)]
        budget = cfg.trust.hop_budget
        self.qtables = [QTable(p, self.hops[p], budget, cfg.trust.q_staleness) for p in range(R)]
        self.ledger: List[Dict[int, TrustLedgerEntry]] = [
            {m: TrustLedgerEntry(m) for m in self.qtables[p].entries} for p in range(R)]
        self.distrust = [[False] * R for _ in range(R)]
        self.gossip_out: List[List[Tuple[GossipedTable, int]]] = [[] for _ in range(R)]
        self.flooding = [False] * R
        self._burst: Dict[Tuple[int, float], Beacon] = {}
        self.window_index = 0
        self.series: List[tuple] = []
        self.retx: Dict[Tuple[int, int], list] = {}
        rate = cfg.routing.data_rate
        self.control_delay = [
            [(r, tx_delay(CONTROL_BITS, rate, float(math.hypot(*(self.rsu_pos[r] - self.rsu_pos[p])))))
             for r in self.nbrs[p]] for p in range(R)]

    def _init_vehicle_state(self) -> None:
        V = self.V
        self.pos = np.zeros((V, 2))
        self.region = np.zeros(V, dtype=np.int64)
        self.prev_region = np.full(V, -1, dtype=np.int64)
        self.carried = np.zeros((V, 2))
        self.carried_at = np.full(V, -math.inf)
        self.adj_rv = np.zeros((self.R, V), dtype=bool)
        self.v2v = None
        self.adj_log: List[np.ndarray] = []
        self.pending_beacons: List[Beacon] = []
        self.last_tick: Optional[float] = None

    def _init_traffic(self) -> None:
        r = self.cfg.routing
        R, V = self.R, self.V
        flows: List[Flow] = []
        veh_src = self.rng_traffic.choice(V, size=r.vehicle_sources, replace=False) if r.vehicle_sources else []
        sources = [("v", int(v)) for v in sorted(veh_src)]
        if r.rsu_sources:
            sources += [("r", p) for p in range(R)]
        total = R + V
        for src in sources:
            own = src[1] if src[0] == "r" else R + src[1]
            k = int(self.rng_traffic.integers(total - 1))
            k = k + 1 if k >= own else k
            dest = ("r", k) if k < R else ("v", k - R)
            phase = float(self.rng_traffic.uniform(0.0, 1.0 / r.pkt_rate))
            flows.append(Flow(src, dest, phase))
        self.flows = flows
        dest_vehicles = sorted({f.dest[1] for f in flows if f.dest[0] == "v"})
        self.router = make_router(r.protocol, self.nbrs, self._attachment, self._distrusts, r.trust_filter,
                                  self.cfg.trust.hop_budget, r.ls_interval, r.dv_interval, dest_vehicles,
                                  control_hop_delay=tx_delay(CONTROL_BITS, r.data_rate, self.cfg.scenario.rsu_spacing)
                                  + r.processing_delay)
        self.bits = r.packet_bytes * 8
        self.next_pid = 0

    def _timeout_scheduler(self, p: int):
        def schedule(pid: int, deadline: float) -> None:
            self.q.schedule(deadline, Action.WATCHDOG_TIMEOUT, (p, pid))
        return schedule

    def _attachment(self, v: int) -> int:
        return int(self.region[v])

    def _distrusts(self, u: int, v: int) -> bool:
        return self.distrust[u][v]

    # ------------------------------------------------------------------ run
    def run(self) -> RunResult:
        s = self.cfg.scenario
        end = s.sim_duration
        q = self.q
        q.schedule(0.0, Action.MOBILITY_TICK)
        for p in range(self.R):
            q.schedule(0.5 * s.beacon_period, Action.BEACON_TICK, (p, 0))
        w = 1
        while w * s.window <= end + 1e-9:
            for p in range(self.R):
                q.schedule(w * s.window, Action.OBSERVATION_WINDOW_END, (p, w))
            w += 1
        for i, f in enumerate(self.flows):
            q.schedule(f.phase, Action.PACKET_INJECT, i)
        interval = self.cfg.environment.event_interval
        for p in range(self.R):
            q.schedule(float(self.rng_events.exponential(interval)), Action.TRAFFIC_EVENT_START, p)
        for p in range(self.R):
            self.flooding[p] = bool(self.bad_rsu[p]) and decide_flooding(self.adv, self.rng_rsu_adv)
        if self.router.interval is not None:
            q.schedule(0.0, Action.ROUTING_TICK)
        if self.router.name == "proactive_dv":
            self._tick_positions(0.0)
            self.router.converge()
        handlers = {
            Action.DELIVER: self._on_deliver,
            Action.BEACON_TICK: self._on_beacon_tick,
            Action.OBSERVATION_WINDOW_END: self._on_window_end,
            Action.MOBILITY_TICK: self._on_mobility_tick,
            Action.TRAFFIC_EVENT_START: self._on_road_event,
            Action.PACKET_INJECT: self._on_inject,
            Action.WATCHDOG_TIMEOUT: self._on_timeout,
            Action.ROUTING_TICK: self._on_routing_tick,
            Action.ALERT_NOTIFY: self._on_alert_notify,
        }
        q.run_until(end, handlers)
        self.counters["events"] = q.processed
        final = {}
        for p in range(self.R):
            for m in self.nbrs[p]:
                c = self.ledger[p][m].classification
                final[(p, m)] = c.value if c is not None else None
        return RunResult(self.cfg, self.seed, sorted(self.roles.malicious_rsus), len(self.roles.malicious_vehicles),
                         [list(n) for n in self.nbrs], final, self.series, self.net, len(self.live),
                         dict(self.counters), self.paths if self.trace_paths else None)

    # ------------------------------------------------------------------ mobility & vehicles
    def _tick_positions(self, now: float) -> None:
        if self.mob is None:
            return
        if self.last_tick is not None:
            self.mob.step(now - self.last_tick)
        self.last_tick = now
        self.pos = self.mob.positions()
        d = np.hypot(self.pos[:, None, 0] - self.rsu_pos[None, :, 0], self.pos[:, None, 1] - self.rsu_pos[None, :, 1])
        self.dist = d
        self.region = np.argmin(d, axis=1)
        self.adj_rv = (d <= self.cfg.scenario.vehicle_range).T

    def _on_mobility_tick(self, now: float, _payload: Any) -> None:
        s = self.cfg.scenario
        if self.mob is not None:
            old_region = self.region.copy() if self.last_tick is not None else None
            self._tick_positions(now)
            counts = np.bincount(self.region, minlength=self.R)
            self.truth.observe_counts(counts, now)
            if old_region is not None:
                self._carry_samples(old_region)
            self._accumulate_estimates()
            self.v2v = vl.v2v_graph(self.pos, s.vehicle_range)
            self.adj_log.append(self.adj_rv.sum(axis=1))
            self.sensed = self.truth.environment(self.pos, now) * (
                1.0 + self.rng_sense.uniform(-1.0, 1.0, size=(self.V, 3)) * self.cfg.environment.sensor_jitter)
            if self.pending_beacons:
                self._process_beacons(now)
        else:
            self.adj_log.append(np.zeros(self.R, dtype=np.int64))
        self.pending_beacons = []
        self.q.schedule(now + s.vehicle_beacon_period, Action.MOBILITY_TICK)

    def _carry_samples(self, old_region: np.ndarray) -> None:
        moved = np.flatnonzero(old_region != self.region)
        if not len(moved):
            return
        jitter = self.cfg.environment.sensor_jitter
        noise = 1.0 + self.rng_sense.uniform(-1.0, 1.0, size=(len(moved), 2)) * jitter
        dens = self.truth.densities()
        self.prev_region[moved] = old_region[moved]
        self.carried_at[moved] = self.last_tick
        self.carried[moved, 0] = self.truth.speed * noise[:, 0]
        self.carried[moved, 1] = dens[old_region[moved]] * noise[:, 1]

    def _accumulate_estimates(self) -> None:
        """Rebuild each RSU's view of its neighbours from samples carried in recently."""
        self.est[:] = 0.0
        has = (self.prev_region >= 0) & (self.carried_at >= self.last_tick - SAMPLE_HORIZON)
        for p in range(self.R):
            idx = np.flatnonzero(self.adj_rv[p] & has)
            if not len(idx):
                continue
            src = self.prev_region[idx]
            self.est[p, :, 0] += np.bincount(src, weights=self.carried[idx, 0], minlength=self.R)
            self.est[p, :, 1] += np.bincount(src, weights=self.carried[idx, 1], minlength=self.R)
            self.est[p, :, 2] += np.bincount(src, minlength=self.R)

    def _process_beacons(self, now: float) -> None:
        """Every vehicle checks the beacons heard since the last tick; disputes flood over V2V."""
        cols: Dict[tuple, Beacon] = {}
        for b in self.pending_beacons:
            key = (b.sender.index, b.speed_avg, b.density, b.temperature, b.humidity, b.carbon_level)
            cols.setdefault(key, b)
        beacons = list(cols.values())
        senders = np.array([b.sender.index for b in beacons])
        claimed = np.array([b.sensor_values() for b in beacons])
        has_copy = self.dist[:, senders] <= self.cfg.scenario.rsu_range
        disagree = vl.relative_disagreement(self.sensed, claimed, self.cfg.thresholds.th2)
        adv = self.adv
        origin = vl.ignore_origins(has_copy, disagree, self.bad_veh, self.rng_veh_adv,
                                   adv.veh_false_ignore_p, adv.veh_suppress_or_flip_p)
        active = np.flatnonzero((origin != vl.NONE).any(axis=0))
        if not len(active):
            return
        origin, has_copy, disagree = origin[:, active], has_copy[:, active], disagree[:, active]
        verdict = np.where(disagree, 0, 1).astype(np.int8)
        sent, level = vl.opinion_flood(self.v2v, origin, has_copy, verdict, self.bad_veh, self.rng_veh_adv,
                                       adv.veh_suppress_or_flip_p, self.cfg.trust.hop_budget)
        hop_delay = self.cfg.routing.v2v_hop_delay
        col_sender = senders[active]
        self.counters["ignore_floods"] += len(active)
        for r, c, vehicles, values, hops in vl.column_reports(sent, level, self.near_rsu[:, col_sender], self.adj_rv):
            arrive = now + (hops + 1) * hop_delay
            self.q.schedule(arrive, Action.DELIVER,
                            ("ignore", r, (int(col_sender[c]), now, dict(zip(vehicles, values)))))

    def _on_road_event(self, now: float, region: int) -> None:
        env = self.cfg.environment
        self.q.schedule(now + float(self.rng_events.exponential(env.event_interval)), Action.TRAFFIC_EVENT_START, region)
        roads = self.grid.road_neighbors(region)
        if not roads or self.mob is None:
            return
        toward = roads[int(self.rng_events.integers(len(roads)))]
        frac = float(self.rng_events.uniform(0.0, 0.5))
        a, b = self.rsu_pos[region], self.rsu_pos[toward]
        loc = Position(float(a[0] + (b[0] - a[0]) * frac), float(a[1] + (b[1] - a[1]) * frac))
        etype = ROAD_EVENTS[int(self.rng_events.integers(len(ROAD_EVENTS)))]
        self.counters["road_events"] += 1
        near = np.hypot(self.pos[:, 0] - loc.x, self.pos[:, 1] - loc.y) <= env.sensing_radius
        if not near.any():
            self.counters["road_events_unobserved"] += 1
            return
        observer = near[:, None]
        origin = vl.event_origins(observer, self.bad_veh, self.rng_veh_adv, self.adv.veh_alert_modify_p)
        verdict = np.ones_like(origin)
        sent, level = vl.opinion_flood(self.v2v, origin, observer, verdict, self.bad_veh, self.rng_veh_adv,
                                       self.adv.veh_alert_modify_p, self.cfg.trust.hop_budget, drop_share=0.0)
        hop_delay = self.cfg.routing.v2v_hop_delay
        for r in self.nbrs[region]:
            rep = vl.reports_for(sent, 0, self.adj_rv[r])
            if not rep:
                continue
            alerts = [TrafficAlert(vehicle_id(v), Position(*self.pos[v]), now + int(level[v, 0]) * hop_delay,
                                   etype, val, loc) for v, val in rep]
            self.counters["event_alerts"] += len(alerts)
            arrive = max(a.timestamp for a in alerts) + hop_delay
            self.q.schedule(arrive, Action.DELIVER, ("event", r, alerts))
        self.q.schedule(now + NOTIFY_DELAY, Action.ALERT_NOTIFY, (region, etype, loc))

    def _on_alert_notify(self, now: float, payload: Any) -> None:
        region, etype, loc = payload
        value = 1
        if self.bad_rsu[region]:
            value = alter_alert_value(self.adv, self.rng_rsu_adv, value)
        alert = TrafficAlert(rsu_id(region), self.rsu_positions[region], now, etype, value, loc)
        self.counters["rsu_alerts"] += 1
        self._send_to_rsus(now, region, ("rsu_alert", alert))

    # ------------------------------------------------------------------ beacons
    def _send_to_rsus(self, now: float, sender: int, body: tuple) -> None:
        kind, content = body
        schedule = self.q.schedule
        for r, delay in self.control_delay[sender]:
            schedule(now + delay, Action.DELIVER, (kind, r, (sender, content)))

    def _on_beacon_tick(self, now: float, payload: Any) -> None:
        p, k = payload
        s = self.cfg.scenario
        if k >= 0:
            self.q.schedule((k + 1.5) * s.beacon_period, Action.BEACON_TICK, (p, k + 1))
        if k < 0:
            # a delayed beacon of a flooding burst; falsification was decided at the tick
            self._emit_beacon(now, self._burst.pop((p, now)), gossip=False)
            return
        env = self.truth.environment_from(self.rsu_spatial[p], now)
        honest = Beacon(rsu_id(p), self.rsu_positions[p], now, self.truth.speed,
                        self.truth.density(p), float(env[0]), float(min(env[1], 100.0)), float(env[2]))
        if not self.bad_rsu[p]:
            self._emit_beacon(now, honest, gossip=True)
            return
        th = self.cfg.thresholds
        burst = rsu_on_beacon_tick(self.adv, self.rng_rsu_adv, honest, self.flooding[p], th.th1, th.th2,
                                   s.beacon_period)
        content = [getattr(honest, f) for f in BEACON_FIELDS]
        self.counters["beacons_falsified"] += sum(
            1 for b in burst if [getattr(b, f) for f in BEACON_FIELDS] != content)
        self._emit_beacon(now, burst[0], gossip=True)
        for b in burst[1:]:
            self._burst[(p, b.timestamp)] = b
            self.q.schedule(b.timestamp, Action.BEACON_TICK, (p, -1))

    def _emit_beacon(self, now: float, beacon: Beacon, gossip: bool) -> None:
        p = beacon.sender.index
        self.counters["beacons_sent"] += 1
        tables = None
        if gossip and self.gossip_out[p]:
            tables, self.gossip_out[p] = self.gossip_out[p], []
        self._send_to_rsus(now, p, ("beacon", (beacon, tables)))
        self.pending_beacons.append(beacon)

    def _on_deliver(self, now: float, payload: Any) -> None:
        kind, to, body = payload
        if kind == "data":
            self._on_data(now, to, body)
        elif kind == "rx":
            self._deliver(now, body)
        elif kind == "overhear":
            pkt, forwarder = body
            if self.watchdog[to].on_overhear(pkt, rsu_id(forwarder), now) is not None:
                self.retx.pop((to, pkt.id), None)
        elif kind == "beacon":
            sender, (beacon, tables) = body
            self.beacons_rx[to][sender].append((beacon, self._estimate(to, sender)))
            if tables:
                self._merge_gossip(to, tables)
        elif kind == "ignore":
            s, ts, rep = body
            self.reports[to][s].append((ts, rep))
            self.counters["ignore_reports"] += len(rep)
        elif kind == "event":
            for a in body:
                self.pools[to].add_vehicle_alert(a)
        elif kind == "rsu_alert":
            self.pools[to].add_rsu_alert(body[1])

    def _merge_gossip(self, p: int, tables: List[Tuple[GossipedTable, int]]) -> None:
        for table, hops_left in tables:
            if self.qtables[p].merge(table):
                self.counters["gossip_merges"] += 1
                if hops_left > 1:
                    self.gossip_out[p].append((table, hops_left - 1))

    # ------------------------------------------------------------------ trust evaluation
    def _on_window_end(self, now: float, payload: Any) -> None:
        p, w = payload
        cfg = self.cfg
        T = cfg.scenario.window
        tn = T if cfg.trust.raw_hiding_time else 1.0
        th = cfg.thresholds
        wd = self.watchdog[p]
        rsu_alerts, vehicle_alerts = self._window_alerts(p, now)
        qt = self.qtables[p]
        led = self.ledger[p]
        results: Dict[int, tuple] = {}
        for s in self.nbrs[p]:
            obs = wd.observation(rsu_id(s))
            tr = trust_routing(obs)
            f_r = obs.sent
            beacons = self.beacons_rx[p][s]
            hist = self.history[p][s]
            flooded = hist.observed > 0 and flooding_check(hist, len(beacons), cfg.trust.normalize_bavg)
            hist.push(len(beacons))
            tb = window_beacon_trust(flooded, lambda: self._beacon_verdicts(p, s, beacons))
            ta = window_alert_trust([a for a in rsu_alerts if a.sender_id.index == s],
                                    [a for a in vehicle_alerts if self._region_of(a.location) == s],
                                    th.th_alert, th.location_radius)
            td = trust_direct(DirectTrustInputs(tr, tb, ta, f_r, len(beacons), T), tn)
            results[s] = (tr, tb, ta, td)
        # neighbour averages use the Q-values held before this window's update
        avgs = {m: qt.neighbor_average(m, self.nbrs[m], w) for m in qt.entries}
        for m, entry in qt.entries.items():
            le = led[m]
            if entry.one_hop:
                tr, tb, ta, td = results[m]
                le.trust_direct = td
                le.components = {"routing": tr, "beacon": tb, "alert": ta}
                le.trust_indirect = qt.update(m, td, avgs[m], cfg.trust.alpha, cfg.trust.gamma)
                le.advance(td)
                self.distrust[p][m] = le.classification is Classification.COMPROMISED
                self.series.append((w, p, m, True, tr, tb, ta, td, le.trust_indirect, le.th_new,
                                    le.classification.value))
            else:
                qv = qt.update(m, None, avgs[m], cfg.trust.alpha, cfg.trust.gamma)
                if qv is None:
                    continue
                le.trust_indirect = qv
                le.advance(qv)
                self.series.append((w, p, m, False, None, None, None, None, qv, le.th_new, le.classification.value))
        self.router.on_trust_change()
        self.gossip_out[p].append((GossipedTable(p, w, qt.snapshot()), cfg.trust.hop_budget))
        # reset for the next window
        wd.start_window(w)
        for s in self.nbrs[p]:
            self.beacons_rx[p][s] = []
            self.reports[p][s] = []
        if p == 0:
            self.counters["windows"] += 1
        if self.bad_rsu[p]:
            self.flooding[p] = decide_flooding(self.adv, self.rng_rsu_adv)

    def _region_of(self, loc: Position) -> int:
        d = np.hypot(self.rsu_pos[:, 0] - loc.x, self.rsu_pos[:, 1] - loc.y)
        return int(np.argmin(d))

    def _window_alerts(self, p: int, now: float) -> Tuple[List[TrafficAlert], List[TrafficAlert]]:
        """This window's alerts, holding back events still unfolding at the boundary."""
        pool = self.pools[p]
        everything = self.deferred[p] + pool.rsu + list(pool.vehicle.values())
        self.pools[p] = AlertPool.empty()
        cutoff = now - self.cfg.thresholds.th_alert
        ready: List[TrafficAlert] = []
        held: List[TrafficAlert] = []
        for group in group_by_event(everything, self.cfg.thresholds.location_radius):
            newest = max(a.timestamp for a in group)
            (held if newest > cutoff and min(a.timestamp for a in group) > now - self.cfg.scenario.window
             else ready).extend(group)
        self.deferred[p] = held
        rsu = [a for a in ready if a.sender_id.kind == NodeKind.RSU]
        veh = [a for a in ready if a.sender_id.kind == NodeKind.VEHICLE]
        return rsu, veh

    def _estimate(self, p: int, s: int) -> Optional[Dict[str, float]]:
        n = self.est[p, s, 2]
        if n == 0:
            return None
        return {"speed": float(self.est[p, s, 0] / n), "density": float(self.est[p, s, 1] / n)}

    def _beacon_verdicts(self, p: int, s: int, received: List[tuple]) -> List[BeaconVerdict]:
        if not received:
            return []
        th = self.cfg.thresholds
        reports = self.reports[p][s]
        times = [r[0] for r in reports]
        verdicts = []
        # beacons whose report spans coincide share one majority outcome
        by_span: Dict[Tuple[int, int], Optional[BeaconVerdict]] = {}
        for i, (b, estimate) in enumerate(received):
            tick = min(int(b.timestamp // self.cfg.scenario.vehicle_beacon_period), len(self.adj_log) - 1)
            adjacent = int(self.adj_log[tick][p]) if tick >= 0 else 0
            if not verify_speed_density(estimate, {"speed": b.speed_avg, "density": b.density}, th.th1):
                verdicts.append(BeaconVerdict(i, 0, adjacent))
                continue
            lo = bisect.bisect_left(times, b.timestamp - th.th3)
            hi = bisect.bisect_right(times, b.timestamp + th.th3)
            if (lo, hi) not in by_span:
                merged: Dict[int, int] = {}
                for _, rep in reports[lo:hi]:
                    merged.update(rep)
                by_span[(lo, hi)] = majority_verdict(-1, merged, 0) if merged else None
            shared = by_span[(lo, hi)]
            if shared is None:
                verdicts.append(majority_verdict(i, {}, adjacent))
            else:
                verdicts.append(BeaconVerdict(i, shared.value, shared.weight_count))
        return verdicts

    # ------------------------------------------------------------------ data traffic
    def _on_routing_tick(self, now: float, _payload: Any) -> None:
        self.router.tick(now)
        self.q.schedule(now + self.router.interval, Action.ROUTING_TICK)

    def _on_inject(self, now: float, i: int) -> None:
        r = self.cfg.routing
        flow = self.flows[i]
        self.q.schedule(now + 1.0 / r.pkt_rate, Action.PACKET_INJECT, i)
        pid = self.next_pid
        self.next_pid += 1
        src = rsu_id(flow.source[1]) if flow.source[0] == "r" else vehicle_id(flow.source[1])
        dst = rsu_id(flow.dest[1]) if flow.dest[0] == "r" else vehicle_id(flow.dest[1])
        pkt = DataPacket(pid, src, dst, make_payload(pid, src, dst, r.packet_bytes), b"", 0, now)
        self.net.injected += 1
        self.live.add(pid)
        if flow.source[0] == "r":
            self._route(now, pkt, flow.source[1], None)
            return
        v = flow.source[1]
        if self.mob is None:
            self._drop(pid, "unreachable")
            return
        first = int(self.region[v])
        d = float(self.dist[v, first])
        hops = max(1, math.ceil(d / self.cfg.scenario.vehicle_range))
        delay = hops * (tx_delay(self.bits, r.data_rate, d / hops) + r.v2v_hop_delay)
        self.q.schedule(now + delay, Action.DELIVER, ("data", first, (pkt, None)))

    def _drop(self, pid: int, cause: str) -> None:
        if pid in self.live:
            self.live.discard(pid)
            setattr(self.net, f"dropped_{cause}", getattr(self.net, f"dropped_{cause}") + 1)

    def _deliver(self, now: float, pkt: DataPacket) -> None:
        if pkt.id not in self.live:
            return
        self.live.discard(pkt.id)
        n = self.net
        n.delivered += 1
        n.delivered_bytes += len(pkt.immutable_payload)
        lat = now - pkt.created_at
        n.latency_sum += lat
        n.latencies.append(lat)
        if pkt.immutable_payload != make_payload(pkt.id, pkt.source, pkt.destination, len(pkt.immutable_payload)):
            n.delivered_modified += 1

    def _release_upstream(self, x: int, prev: Optional[int], pid: int) -> None:
        """A route error travels back: the upstream watchdog stops waiting without judging x."""
        if prev is None:
            return
        entry = self.watchdog[prev].entries.get(pid)
        if entry is not None and entry.next_hop.index == x:
            del self.watchdog[prev].entries[pid]
            self.watchdog[prev].observation(rsu_id(x)).sent -= 1
            self.retx.pop((prev, pid), None)

    def _on_data(self, now: float, x: int, body: tuple) -> None:
        pkt, prev = body
        if self.trace_paths:
            self.paths.setdefault(pkt.id, []).append(x)
        if pkt.destination.kind == NodeKind.RSU and pkt.destination.index == x:
            self._deliver(now, pkt)
            return
        if self.bad_rsu[x]:
            act = rsu_on_relay(self.adv, self.rng_rsu_adv)
            if act is RelayAction.DROP:
                watched = prev is not None and (prev, pkt.id) in self.retx
                if not watched:
                    self._drop(pkt.id, "malice")
                return
            if act is RelayAction.FORWARD_MODIFIED:
                pkt = DataPacket(pkt.id, pkt.source, pkt.destination, tamper_payload(pkt, self.rng_rsu_adv),
                                 pkt.mutable_header, pkt.hop_count, pkt.created_at)
        self._route(now + self.cfg.routing.processing_delay, pkt, x, prev)

    def _overheard_by(self, t: float, pkt: DataPacket, x: int, prev: Optional[int]) -> None:
        if prev is None:
            return
        d = float(math.hypot(*(self.rsu_pos[x] - self.rsu_pos[prev])))
        self.q.schedule(t + d / SPEED_OF_LIGHT, Action.DELIVER, ("overhear", prev, (pkt, x)))

    def _route(self, t: float, pkt: DataPacket, x: int, prev: Optional[int]) -> None:
        r = self.cfg.routing
        dest = ("r", pkt.destination.index) if pkt.destination.kind == NodeKind.RSU else ("v", pkt.destination.index)
        first_rsu = prev is None
        hop, extra = self.router.resolve(x, dest, t)
        if extra and not first_rsu:
            # only the first RSU may wait for a route discovery
            hop = None
        t += extra
        if hop is None:
            self._release_upstream(x, prev, pkt.id)
            self._drop(pkt.id, "no_route")
            return
        if hop == LOCAL:
            self._overheard_by(t, pkt, x, prev)
            v = pkt.destination.index
            if pkt.destination.kind == NodeKind.VEHICLE and self.mob is not None:
                d = float(self.dist[v, x])
                if d <= self.cfg.scenario.rsu_range:
                    self.q.schedule(t + tx_delay(self.bits, r.data_rate, d), Action.DELIVER, ("rx", x, pkt))
                    return
            self.router.on_delivery_failure(x, dest)
            self._drop(pkt.id, "unreachable")
            return
        if pkt.hop_count >= self.cfg.trust.hop_budget:
            self._release_upstream(x, prev, pkt.id)
            self._drop(pkt.id, "hop_budget")
            return
        out = DataPacket(pkt.id, pkt.source, pkt.destination, pkt.immutable_payload, pkt.mutable_header,
                         pkt.hop_count + 1, pkt.created_at)
        self._overheard_by(t, out, x, prev)
        self._transmit(t, out, x, hop, 0)

    def _transmit(self, t: float, pkt: DataPacket, x: int, y: int, tries: int) -> None:
        r = self.cfg.routing
        d = float(math.hypot(*(self.rsu_pos[y] - self.rsu_pos[x])))
        self.q.schedule(t + tx_delay(self.bits, r.data_rate, d), Action.DELIVER, ("data", y, (pkt, x)))
        # the destination RSU keeps the packet; every other next hop must pass it on
        if not (pkt.destination.kind == NodeKind.RSU and pkt.destination.index == y):
            t_exp = expected_forward_time(self.bits, r.data_rate, d, SPEED_OF_LIGHT, r.t_other)
            self.watchdog[x].on_forward_to_next_hop(pkt, rsu_id(y), t, t_exp)
            self.retx[(x, pkt.id)] = [pkt, y, tries]

    def _on_timeout(self, now: float, payload: Tuple[int, int]) -> None:
        x, pid = payload
        if self.watchdog[x].on_timeout(pid, now) is None:
            return
        state = self.retx.pop((x, pid), None)
        if state is None:
            return
        pkt, y, tries = state
        if tries < self.cfg.routing.retry_limit and pid in self.live:
            self.net.retransmissions += 1
            self._transmit(now, pkt, x, y, tries + 1)
        else:
            self._drop(pid, "malice")



def run(cfg: ScenarioConfig, seed: Optional[int] = None, **kwargs: Any) -> RunResult:
    return Simulation(cfg, seed, **kwargs).run()
