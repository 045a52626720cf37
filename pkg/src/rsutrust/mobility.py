"""Manhattan-grid mobility: constant-speed travel along road segments, random turns at intersections."""
from __future__ import annotations

from typing import List

import numpy as np

from .model import GridTopology


class ManhattanMobility:
    def __init__(self, grid: GridTopology, n: int, speed: float, rng: np.random.Generator):
        self.grid = grid
        self.nodes = grid.positions()
        self.adjacent: List[List[int]] = [grid.road_neighbors(i) for i in range(grid.n)]
        self.speed = speed
        self.rng = rng
        self.length = grid.spacing
        self.n = n
        segments = [(a, b) for a in range(grid.n) for b in self.adjacent[a]]
        if n and not segments:
            raise ValueError("vehicles need at least two intersections to drive between")
        pick = rng.integers(0, len(segments), size=n) if n else np.zeros(0, dtype=int)
        self.origin = np.array([segments[k][0] for k in pick], dtype=np.int64)
        self.target = np.array([segments[k][1] for k in pick], dtype=np.int64)
        self.progress = rng.uniform(0.0, self.length, size=n)
        self.turns = 0

    def positions(self) -> np.ndarray:
        a = self.nodes[self.origin]
        b = self.nodes[self.target]
        f = (self.progress / self.length)[:, None]
        return a + (b - a) * f

    def velocities(self) -> np.ndarray:
        d = self.nodes[self.target] - self.nodes[self.origin]
        return d / self.length * self.speed

    def _next_target(self, at: int, came_from: int) -> int:
        options = [j for j in self.adjacent[at] if j != came_from] or self.adjacent[at]
        return options[int(self.rng.integers(len(options)))]

    def step(self, dt: float) -> None:
        self.progress += self.speed * dt
        for i in np.flatnonzero(self.progress >= self.length):
            while self.progress[i] >= self.length:
                self.progress[i] -= self.length
                at = int(self.target[i])
                self.target[i] = self._next_target(at, int(self.origin[i]))
                self.origin[i] = at
                self.turns += 1
