"""Undirected literal graph of a clause system and shortest-path distances.

Vertices are the non-unit variables; two variables are adjacent iff they
co-occur in at least one clause.  Unit-fixed variables carry no dynamics
and are excluded.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .cnf import ClauseSystem


@dataclass
class LiteralGraph:
    vertices: list[int]
    adjacency: dict[int, set[int]]
    _row: dict[int, int] = field(default_factory=dict, repr=False)
    _dist: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self._row:
            self._row = {v: i for i, v in enumerate(self.vertices)}

    def _require(self, var: int) -> int:
        if var not in self._row:
            raise KeyError(f"variable {var} is not a graph vertex")
        return self._row[var]

    def distances(self) -> np.ndarray:
        """All-pairs BFS distance matrix; -1 marks unreachable pairs."""
        if self._dist is None:
            n = len(self.vertices)
            dist = np.full((n, n), -1, dtype=np.int32)
            for i, src in enumerate(self.vertices):
                dist[i, i] = 0
                queue = deque([src])
                while queue:
                    u = queue.popleft()
                    du = dist[i, self._row[u]]
                    for w in self.adjacency[u]:
                        j = self._row[w]
                        if dist[i, j] < 0:
                            dist[i, j] = du + 1
                            queue.append(w)
            self._dist = dist
        return self._dist

    @property
    def diameter(self) -> int:
        dist = self.distances()
        return int(dist.max(initial=0))

    def pairs_at_distance(self, d: int) -> list[tuple[int, int]]:
        dist = self.distances()
        out = []
        rows, cols = np.nonzero(dist == d)
        for i, j in zip(rows.tolist(), cols.tolist()):
            if i < j:
                out.append((self.vertices[i], self.vertices[j]))
        return out


def literal_graph(cs: ClauseSystem) -> LiteralGraph:
    vertices = cs.free_vars
    adjacency: dict[int, set[int]] = {v: set() for v in vertices}
    units = cs.units
    for clause in cs.clauses:
        members = [v for v, _ in clause if v not in units]
        for a in members:
            for b in members:
                if a != b:
                    adjacency[a].add(b)
    return LiteralGraph(vertices=vertices, adjacency=adjacency)


def graph_distance(g: LiteralGraph, a: int, b: int) -> int | float:
    """Shortest-path length between two vertices; ``math.inf`` if unreachable."""
    i = g._require(a)
    j = g._require(b)
    d = int(g.distances()[i, j])
    return d if d >= 0 else math.inf


def shortest_path(g: LiteralGraph, a: int, b: int) -> list[int] | None:
    """One explicit shortest path from a to b, or None if unreachable."""
    g._require(a)
    g._require(b)
    if a == b:
        return [a]
    parent: dict[int, int] = {a: a}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if w not in parent:
                parent[w] = u
                if w == b:
                    path = [b]
                    while path[-1] != a:
                        path.append(parent[path[-1]])
                    return path[::-1]
                queue.append(w)
    return None
