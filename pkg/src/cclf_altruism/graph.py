"""Interaction graphs for networked dynamic systems.

An edge ``(i, j)`` means the state of agent ``j`` enters the dynamics of
agent ``i``: ``j`` is an in-neighbor of ``i`` and ``i`` is an out-neighbor
of ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


class DegenerateGeometryError(ValueError):
    """Raised when two agents occupy the same position."""


@dataclass(frozen=True)
class InteractionGraph:
    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"agent count must be nonnegative, got {self.n}")
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop ({i}, {i}) not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "InteractionGraph":
        return cls(n, frozenset((int(i), int(j)) for i, j in edges))

    @classmethod
    def complete(cls, n: int) -> "InteractionGraph":
        return cls.from_edges(n, ((i, j) for i in range(n) for j in range(n) if i != j))

    def is_symmetric(self) -> bool:
        return all((j, i) in self.edges for i, j in self.edges)

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"agent index {i} out of range for n={self.n}")

    def in_neighbors(self, i: int) -> set[int]:
        self._check_index(i)
        return {j for a, j in self.edges if a == i}

    def out_neighbors(self, i: int) -> set[int]:
        self._check_index(i)
        return {a for a, j in self.edges if j == i}

    def neighbors(self, i: int) -> set[int]:
        return self.in_neighbors(i) | self.out_neighbors(i)


def in_neighbors(g: InteractionGraph, i: int) -> set[int]:
    return g.in_neighbors(i)


def out_neighbors(g: InteractionGraph, i: int) -> set[int]:
    return g.out_neighbors(i)


def build_proximity_graph(positions, delta: float) -> InteractionGraph:
    """Connect every pair of agents within ``delta`` of each other (inclusive).

    The result is symmetric. Coincident agents raise
    :class:`DegenerateGeometryError` because the repulsion field is singular
    there.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions must be finite")
    n = len(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    edges = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if dist[i, j] == 0.0:
                raise DegenerateGeometryError(f"agents {i} and {j} are coincident at {pos[i].tolist()}")
            if dist[i, j] <= delta:
                edges.append((i, j))
    return InteractionGraph.from_edges(n, edges)
