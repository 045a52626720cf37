"""Hop-count routing over the RSU backbone: on-demand, link-state with MPRs, and sequenced distance-vector.

Destinations are keyed as ("r", rsu) or ("v", vehicle). A router answers, for a
node holding a packet, either LOCAL (hand the packet to the destination), the
next RSU, or None when no route is known. With the trust filter on, node u
never forwards through a neighbour it classifies as compromised, unless that
neighbour is the final RSU for the packet.
"""
from __future__ import annotations

from collections import deque
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

LOCAL = -1
DestKey = Tuple[str, int]
Distrusts = Callable[[int, int], bool]


def never(u: int, v: int) -> bool:
    return False


def select_mpr(node: int, neighbors: Sequence[Iterable[int]]) -> Set[int]:
    """Greedy multipoint relay set: one-hop neighbours covering every strict two-hop neighbour."""
    one = set(neighbors[node])
    two = {w for v in one for w in neighbors[v]} - one - {node}
    mpr: Set[int] = set()
    uncovered = set(two)
    # neighbours that are the only route to some two-hop node are mandatory
    for w in sorted(two):
        via = [v for v in one if w in neighbors[v]]
        if len(via) == 1:
            mpr.add(via[0])
    for v in mpr:
        uncovered -= set(neighbors[v])
    while uncovered:
        best = max(sorted(one - mpr), key=lambda v: len(uncovered & set(neighbors[v])))
        mpr.add(best)
        uncovered -= set(neighbors[best])
    return mpr


def bfs_path(start: int, target: int, neighbors: Sequence[Sequence[int]], alive: Sequence[bool],
             distrusts: Distrusts, hop_budget: int) -> Optional[List[int]]:
    """Shortest trusted path start -> target, ties broken by lower node index."""
    if start == target:
        return [start]
    parent = {start: start}
    depth = {start: 0}
    q = deque([start])
    while q:
        u = q.popleft()
        if depth[u] >= hop_budget:
            continue
        for v in neighbors[u]:
            if v in parent or not alive[v]:
                continue
            if v != target and distrusts(u, v):
                continue
            parent[v] = u
            depth[v] = depth[u] + 1
            if v == target:
                path = [v]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                return path[::-1]
            q.append(v)
    return None


class Router:
    name = "base"
    interval: Optional[float] = None

    def __init__(self, neighbors: Sequence[Sequence[int]], attachment: Callable[[int], int],
                 distrusts: Distrusts = never, trust_filter: bool = False, hop_budget: int = 6,
                 control_hop_delay: float = 0.001):
        self.neighbors = [sorted(n) for n in neighbors]
        self.n = len(neighbors)
        self.alive = [True] * self.n
        self.attachment = attachment
        self.trust_filter = trust_filter
        self._distrusts = distrusts
        self.hop_budget = hop_budget
        self.control_hop_delay = control_hop_delay
        self.control_messages = 0

    def distrusts(self, u: int, v: int) -> bool:
        return self.trust_filter and self._distrusts(u, v)

    def target(self, dest: DestKey) -> int:
        return dest[1] if dest[0] == "r" else self.attachment(dest[1])

    def resolve(self, node: int, dest: DestKey, now: float) -> Tuple[Optional[int], float]:
        """(next hop, LOCAL or None; extra latency spent finding the route)."""
        raise NotImplementedError

    def tick(self, now: float) -> None:
        pass

    def on_delivery_failure(self, node: int, dest: DestKey) -> None:
        pass

    def on_trust_change(self) -> None:
        pass

    def fail(self, node: int) -> None:
        self.alive[node] = False


class ReactiveRouter(Router):
    """Routes found on demand by a flooded request and cached until they break."""

    name = "reactive"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.cache: Dict[Tuple[int, DestKey], int] = {}
        self.discoveries = 0

    def resolve(self, node, dest, now):
        target = self.target(dest)
        hop = self.cache.get((node, dest))
        if hop is not None and hop != LOCAL and hop != target and self.distrusts(node, hop):
            # a relay that became distrusted (or a vehicle that moved on) breaks the cached route
            self.on_delivery_failure(node, dest)
            hop = None
        if hop is not None:
            return hop, 0.0
        self.discoveries += 1
        path = bfs_path(node, target, self.neighbors, self.alive, self.distrusts, self.hop_budget)
        self.control_messages += self.n
        if path is None:
            return None, 0.0
        for u, v in zip(path, path[1:]):
            self.cache[(u, dest)] = v
        self.cache[(target, dest)] = LOCAL
        delay = 2 * (len(path) - 1) * self.control_hop_delay
        return self.cache[(node, dest)], delay

    def _drop_where(self, pred: Callable[[int, DestKey, int], bool]) -> None:
        for key in [k for k, v in self.cache.items() if pred(k[0], k[1], v)]:
            del self.cache[key]

    def on_delivery_failure(self, node, dest):
        # route error: every cached hop toward this destination is discarded
        self._drop_where(lambda u, d, v: d == dest)

    def on_trust_change(self):
        if self.trust_filter:
            self._drop_where(lambda u, d, v: v != LOCAL and v != self.target(d) and self.distrusts(u, v))

    def fail(self, node):
        super().fail(node)
        self._drop_where(lambda u, d, v: u == node or v == node)


class LinkStateRouter(Router):
    """Periodic link-state: MPR flooding of trusted links, then shortest-path trees."""

    name = "proactive_ls"

    def __init__(self, *args, interval: float = 5.0, **kwargs):
        super().__init__(*args, **kwargs)
        self.interval = interval
        self.next_hop: Dict[int, List[Optional[int]]] = {}
        self.snapshot: Dict[int, int] = {}
        self.mpr: List[Set[int]] = [set() for _ in range(self.n)]
        self._vehicles: Set[int] = set()

    def track_vehicles(self, vehicles: Iterable[int]) -> None:
        self._vehicles = set(vehicles)

    def _links(self) -> List[List[int]]:
        return [[v for v in self.neighbors[u] if self.alive[u] and self.alive[v]] for u in range(self.n)]

    def tick(self, now):
        links = self._links()
        self.mpr = [select_mpr(u, links) if self.alive[u] else set() for u in range(self.n)]
        # each MPR retransmits every node's advertisement once
        relays = sum(1 for u in range(self.n) if any(u in m for m in self.mpr))
        self.control_messages += self.n * max(relays, 1)
        self.next_hop = {t: self._tree(t, links) for t in range(self.n) if self.alive[t]}
        self.snapshot = {v: self.attachment(v) for v in sorted(self._vehicles)}

    def _tree(self, target: int, links: List[List[int]]) -> List[Optional[int]]:
        hop: List[Optional[int]] = [None] * self.n
        depth = {target: 0}
        q = deque([target])
        while q:
            v = q.popleft()
            if depth[v] >= self.hop_budget:
                continue
            for u in links[v]:
                if u in depth:
                    continue
                if v != target and self.distrusts(u, v):
                    continue
                depth[u] = depth[v] + 1
                hop[u] = v
                q.append(u)
        return hop

    def target(self, dest):
        if dest[0] == "r":
            return dest[1]
        target = self.snapshot.get(dest[1])
        return target if target is not None else self.attachment(dest[1])

    def resolve(self, node, dest, now):
        target = self.target(dest)
        if node == target:
            return LOCAL, 0.0
        tree = self.next_hop.get(target)
        if tree is None:
            return None, 0.0
        return tree[node], 0.0

    def on_trust_change(self):
        # a node's own classifications are local knowledge: recompute paths without waiting for the next update
        if self.trust_filter:
            links = self._links()
            self.next_hop = {t: self._tree(t, links) for t in self.next_hop}


class DistanceVectorRouter(Router):
    """Periodic synchronous distance-vector exchange with destination sequence numbers."""

    name = "proactive_dv"
    INF = 10 ** 6

    def __init__(self, *args, interval: float = 15.0, vehicles: Iterable[int] = (), **kwargs):
        super().__init__(*args, **kwargs)
        self.interval = interval
        self.vehicles = sorted(set(vehicles))
        self.keys: List[DestKey] = [("r", i) for i in range(self.n)] + [("v", v) for v in self.vehicles]
        self.index = {k: i for i, k in enumerate(self.keys)}
        d = len(self.keys)
        self.metric = np.full((self.n, d), self.INF, dtype=np.int64)
        self.seq = np.full((self.n, d), -1, dtype=np.int64)
        self.hop = np.full((self.n, d), -2, dtype=np.int64)
        self.rounds = 0
        self.owner = np.full(d, -1, dtype=np.int64)

    def _originate(self) -> None:
        s = 2 * self.rounds
        owner = np.array([k[1] if k[0] == "r" else self.attachment(k[1]) for k in self.keys], dtype=np.int64)
        for u in range(self.n):
            if not self.alive[u]:
                continue
            mine = owner == u
            # a former owner announces the loss with an odd sequence number
            lost = (self.owner == u) & ~mine & (self.metric[u] == 0)
            self.metric[u, lost] = self.INF
            self.seq[u, lost] += 1
            self.hop[u, lost] = -2
            self.metric[u, mine] = 0
            self.seq[u, mine] = s
            self.hop[u, mine] = LOCAL
        self.owner = owner

    def exchange(self) -> None:
        """One synchronous round: every node hears every neighbour's previous table."""
        metric, seq = self.metric.copy(), self.seq.copy()
        new_m, new_s, new_h = self.metric.copy(), self.seq.copy(), self.hop.copy()
        for u in range(self.n):
            if not self.alive[u]:
                continue
            # routes through a dead or now-distrusted neighbour are invalidated
            for v in sorted(set(int(h) for h in self.hop[u] if h >= 0)):
                bad = self.hop[u] == v
                if self.alive[v]:
                    if not self.distrusts(u, v):
                        continue
                    bad &= self.owner != v
                new_m[u, bad] = self.INF
                new_s[u, bad] = np.where(new_s[u, bad] % 2 == 0, new_s[u, bad] + 1, new_s[u, bad])
                new_h[u, bad] = -2
            for v in self.neighbors[u]:
                if not self.alive[v]:
                    continue
                allow = np.ones(len(self.keys), dtype=bool)
                if self.distrusts(u, v):
                    allow = self.owner == v
                cand_m = np.minimum(metric[v] + 1, self.INF)
                cand_m[cand_m > self.hop_budget] = self.INF
                cand_s = seq[v]
                better = allow & (cand_s >= 0) & (
                    (cand_s > new_s[u]) | ((cand_s == new_s[u]) & (cand_m < new_m[u])))
                better &= new_m[u] != 0
                better &= (cand_m < self.INF) | (cand_s > new_s[u])
                new_m[u, better] = cand_m[better]
                new_s[u, better] = cand_s[better]
                new_h[u, better] = np.where(cand_m[better] < self.INF, v, -2)
            self.control_messages += len(self.neighbors[u])
        self.metric, self.seq, self.hop = new_m, new_s, new_h

    def tick(self, now):
        self._originate()
        self.exchange()
        self.rounds += 1

    def target(self, dest):
        i = self.index.get(dest)
        if i is not None and self.owner[i] >= 0:
            return int(self.owner[i])
        return super().target(dest)

    def on_trust_change(self):
        # routes through a newly distrusted neighbour are invalidated at once, as a broken link would be
        if not self.trust_filter:
            return
        for u in range(self.n):
            for v in sorted(set(int(h) for h in self.hop[u] if h >= 0)):
                if not self.distrusts(u, v):
                    continue
                bad = (self.hop[u] == v) & (self.owner != v)
                self.metric[u, bad] = self.INF
                self.seq[u, bad] = np.where(self.seq[u, bad] % 2 == 0, self.seq[u, bad] + 1, self.seq[u, bad])
                self.hop[u, bad] = -2

    def converge(self, rounds: Optional[int] = None) -> None:
        for _ in range(rounds if rounds is not None else self.hop_budget + 2):
            self.tick(0.0)

    def resolve(self, node, dest, now):
        i = self.index.get(dest)
        if i is None:
            return None, 0.0
        h = int(self.hop[node, i])
        if h == LOCAL:
            return LOCAL, 0.0
        if h < 0 or self.metric[node, i] >= self.INF:
            return None, 0.0
        return h, 0.0


def make_router(protocol: str, neighbors, attachment, distrusts, trust_filter, hop_budget,
                ls_interval: float, dv_interval: float, vehicles: Iterable[int] = (),
                control_hop_delay: float = 0.001) -> Router:
    kw = dict(distrusts=distrusts, trust_filter=trust_filter, hop_budget=hop_budget,
              control_hop_delay=control_hop_delay)
    if protocol == "reactive":
        return ReactiveRouter(neighbors, attachment, **kw)
    if protocol == "proactive_ls":
        r = LinkStateRouter(neighbors, attachment, interval=ls_interval, **kw)
        r.track_vehicles(vehicles)
        return r
    if protocol == "proactive_dv":
        return DistanceVectorRouter(neighbors, attachment, interval=dv_interval, vehicles=vehicles, **kw)
    raise ValueError(f"unknown protocol {protocol!r}")
