"""Planar single integrators with induced inverse-square repulsion.

Each agent follows ``xdot_i = f_i(x_i) + g_i (u_N_i(x) + u_i)`` with
``f_i = 0`` and ``g_i = I``, so the coupled drift is the repulsion field

    u_N_i(x) = gamma * sum_{j in N_i} (x_i - x_j) / |x_i - x_j|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np

from .graph import InteractionGraph

MIN_DISTANCE = 1e-9


class SingularityError(ArithmeticError):
    """Raised when the repulsion field is evaluated at (near) coincidence."""


@dataclass(frozen=True)
class AgentSpec:
    goal: np.ndarray
    weight: float = 1.0
    u_max: float = 2.0

    def __post_init__(self):
        goal = np.asarray(self.goal, dtype=float).reshape(2)
        if not np.all(np.isfinite(goal)):
            raise ValueError("goal must be finite")
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")
        if not self.u_max > 0:
            raise ValueError(f"u_max must be positive, got {self.u_max}")
        object.__setattr__(self, "goal", goal)


@dataclass(frozen=True)
class AgentState:
    x: np.ndarray
    u_last: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(2)
        u = np.asarray(self.u_last, dtype=float).reshape(2)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
            raise ValueError("agent state must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u_last", u)


@dataclass(frozen=True)
class CouplingParams:
    gamma: float = 0.5
    delta: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


def positions_of(states: Sequence[AgentState]) -> np.ndarray:
    return np.array([s.x for s in states], dtype=float).reshape(-1, 2)


def _offset(i, j, positions):
    d = positions[i] - positions[j]
    d2 = float(d @ d)
    if d2 < MIN_DISTANCE**2:
        raise SingularityError(f"agents {i} and {j} closer than {MIN_DISTANCE} m")
    return d, d2


def repulsion_field(i: int, positions, graph: InteractionGraph, gamma: float) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    out = np.zeros(2)
    for j in sorted(graph.in_neighbors(i)):
        d, d2 = _offset(i, j, positions)
        out += d / d2
    return gamma * out


def repulsion_jacobian(i: int, j: int, positions, gamma: float) -> np.ndarray:
    """Derivative of agent ``i``'s repulsion term from ``j`` with respect to ``x_j``.

    Equals ``gamma * (-I/|d|^2 + 2 d d^T/|d|^4)`` with ``d = x_i - x_j``. The
    derivative with respect to ``x_i`` is the negation.
    """
    positions = np.asarray(positions, dtype=float)
    d, d2 = _offset(i, j, positions)
    return gamma * (-np.eye(2) / d2 + 2.0 * np.outer(d, d) / (d2 * d2))


class ControlAffineDynamics(Protocol):
    """Networked control-affine dynamics ``xdot_i = fbar_i(x) + G_i u_i``.

    ``drift_jacobian(i, k, ...)`` is the derivative of ``fbar_i`` with respect
    to ``x_k`` (``k == i`` gives the self term). ``input_matrix`` must be
    state independent.
    """

    def drift(self, i: int, positions, graph: InteractionGraph) -> np.ndarray: ...

    def drift_jacobian(self, i: int, k: int, positions, graph: InteractionGraph) -> np.ndarray: ...

    def input_matrix(self, i: int) -> np.ndarray: ...


@dataclass(frozen=True)
class RepulsiveSingleIntegrator:
    gamma: float = 0.5

    def drift(self, i, positions, graph):
        return repulsion_field(i, positions, graph, self.gamma)

    def drift_jacobian(self, i, k, positions, graph):
        if k == i:
            jac = np.zeros((2, 2))
            for j in sorted(graph.in_neighbors(i)):
                jac -= repulsion_jacobian(i, j, positions, self.gamma)
            return jac
        if k in graph.in_neighbors(i):
            return repulsion_jacobian(i, k, positions, self.gamma)
        return np.zeros((2, 2))

    def input_matrix(self, i):
        return np.eye(2)


def drift(i: int, positions, graph: InteractionGraph, gamma: float) -> np.ndarray:
    """Uncontrolled velocity of agent ``i`` (the repulsion field, since f_i = 0)."""
    return repulsion_field(i, positions, graph, gamma)


def step(states: Sequence[AgentState], specs: Sequence[AgentSpec], inputs, dt: float,
         graph: InteractionGraph, gamma: float) -> list[AgentState]:
    """Advance every agent by one explicit Euler step."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    inputs = np.asarray(inputs, dtype=float).reshape(-1, 2)
    positions = positions_of(states)
    for i, (u, spec) in enumerate(zip(inputs, specs)):
        if np.linalg.norm(u) > spec.u_max + 1e-9:
            raise ValueError(f"input of agent {i} exceeds u_max={spec.u_max}: |u|={np.linalg.norm(u)}")
    vel = [drift(i, positions, graph, gamma) + inputs[i] for i in range(len(states))]
    return [replace(s, x=s.x + dt * v, u_last=inputs[i].copy())
            for i, (s, v) in enumerate(zip(states, vel))]
