"""Hamilton's-rule constraints on each agent's input.

Relatedness is relative task importance, ``r_ij = w_j / w_i``. The cost of an
input to agent ``i`` is ``b_i`` and its benefit to neighbor ``j`` is
``-a_ji``, so an input is admissible when

    b_i(u_i) + sum_{j in N_i^-} r_ij a_ji(u_i) <= 0.

With an affine estimate of ``udot_i`` this is one affine inequality in
``u_i`` (``paper`` mode) or a ball (``full`` mode, where ``u^T u`` is kept).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lyapunov
from .dynamics import ControlAffineDynamics
from .graph import InteractionGraph
from .lyapunov import ClassKParams, as_positions

ZERO_ROW = 1e-12
UDOT_CONVENTIONS = ("backward", "paper")


class InfeasibleConstraintError(ValueError):
    """Raised when a constraint can never be satisfied."""


@dataclass(frozen=True)
class LinearConstraint:
    """``coeff @ u <= rhs``."""

    coeff: np.ndarray
    rhs: float

    def __post_init__(self):
        coeff = np.asarray(self.coeff, dtype=float).reshape(2)
        if not (np.all(np.isfinite(coeff)) and np.isfinite(self.rhs)):
            raise ValueError("constraint data must be finite")
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "rhs", float(self.rhs))

    @property
    def is_pure_rhs(self) -> bool:
        return math.hypot(*self.coeff) <= ZERO_ROW

    @property
    def trivially_feasible(self) -> bool:
        return self.is_pure_rhs and self.rhs >= 0.0

    @property
    def trivially_infeasible(self) -> bool:
        return self.is_pure_rhs and self.rhs < 0.0

    def normalized(self) -> "LinearConstraint":
        """Scale to unit coefficient norm; pure-rhs rows are returned as is."""
        if self.is_pure_rhs:
            return self
        s = float(np.linalg.norm(self.coeff))
        return LinearConstraint(self.coeff / s, self.rhs / s)

    def value(self, u) -> float:
        return float(self.coeff @ np.asarray(u, dtype=float)) - self.rhs

    def satisfied(self, u, tol: float = 1e-9) -> bool:
        return self.value(u) <= tol


@dataclass(frozen=True)
class QuadraticConstraint:
    """``u^T u + coeff @ u <= rhs``, i.e. a closed ball in input space."""

    coeff: np.ndarray
    rhs: float

    def __post_init__(self):
        object.__setattr__(self, "coeff", np.asarray(self.coeff, dtype=float).reshape(2))
        object.__setattr__(self, "rhs", float(self.rhs))

    @property
    def center(self) -> np.ndarray:
        return -0.5 * self.coeff

    @property
    def radius_sq(self) -> float:
        return self.rhs + 0.25 * float(self.coeff @ self.coeff)

    def value(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ u) + float(self.coeff @ u) - self.rhs

    def satisfied(self, u, tol: float = 1e-9) -> bool:
        return self.value(u) <= tol


def hamilton_holds(r: float, B: float, C: float) -> bool:
    if not r > 0:
        raise ValueError(f"relatedness must be positive, got {r}")
    return r * B >= C


def relatedness(specs, i: int, j: int) -> float:
    wi, wj = specs[i].weight, specs[j].weight
    if not (wi > 0 and wj > 0):
        raise ValueError("weights must be positive")
    return wj / wi


def estimate_udot(u_candidate, u_last, dt: float, convention: str = "paper") -> np.ndarray:
    """Affine estimate of the input rate.

    ``paper`` returns ``(u_last - u_candidate) / dt``; ``backward`` returns the
    backward difference ``(u_candidate - u_last) / dt``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    diff = np.asarray(u_last, dtype=float) - np.asarray(u_candidate, dtype=float)
    if convention == "paper":
        return diff / dt
    if convention == "backward":
        return -diff / dt
    raise ValueError(f"unknown udot convention {convention!r}")


def _udot_sign(convention):
    if convention not in UDOT_CONVENTIONS:
        raise ValueError(f"unknown udot convention {convention!r}")
    return 1.0 if convention == "backward" else -1.0


def neighbor_effect_gradient(j: int, i: int, states, specs, graph, dyn) -> np.ndarray:
    """Gradient of ``Q_j = (x_j* - x_j)^T fbar_j`` with respect to ``x_i``.

    Zero when ``i`` does not enter ``j``'s dynamics.
    """
    pos = as_positions(states)
    if i not in graph.in_neighbors(j):
        return np.zeros(2)
    return -lyapunov.neighbor_row(j, i, pos, specs, graph, dyn)


def simple_altruism_constraint(i: int, j: int, states, specs, graph: InteractionGraph,
                               dyn: ControlAffineDynamics) -> LinearConstraint:
    """First-order two-agent condition, weighted by relatedness.

    ``((x_i* - x_i)^T + r_ij dQ_j/dx_i) u_i >= -r_ij dQ_j/dx_i fbar_i``,
    returned as ``coeff @ u <= rhs`` (not normalized).
    """
    pos = as_positions(states)
    r = relatedness(specs, i, j)
    dQ = neighbor_effect_gradient(j, i, pos, specs, graph, dyn)
    to_goal = specs[i].goal - pos[i]
    fbar = dyn.drift(i, pos, graph)
    return LinearConstraint(-(to_goal + r * dQ), r * float(dQ @ fbar))


def cclf_altruism_constraint(i: int, states, specs, graph: InteractionGraph, dyn: ControlAffineDynamics,
                             params: ClassKParams, dt: float, u_last=None, mode: str = "paper",
                             margin: float = 0.0, udot_convention: str = "paper"):
    """Constraint on ``u_i`` under which ``b_i + sum_j r_ij a_ji <= 0``.

    ``u_last`` is the input applied at the previous step (zero if omitted).
    ``margin`` bounds the rate-estimate error: the right side is tightened by
    ``margin * |LgV_i|``. Returns a :class:`LinearConstraint` in ``paper``
    mode and a :class:`QuadraticConstraint` in ``full`` mode; neither is
    normalized.
    """
    lyapunov._check_mode(mode)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    pos = as_positions(states)
    u0 = np.zeros(2) if u_last is None else np.asarray(u_last, dtype=float)
    sgn = _udot_sign(udot_convention)
    t = lyapunov.lie_terms(i, pos, specs, graph, dyn)
    q, c = lyapunov.q_and_c(i, pos, specs, graph, dyn, params, terms=t)
    G = dyn.input_matrix(i)

    coeff = q + sgn * t.LgV / dt
    rhs = -c + sgn * float(t.LgV @ u0) / dt - margin * float(np.linalg.norm(t.LgV))
    for j in sorted(graph.out_neighbors(i)):
        r = relatedness(specs, i, j)
        row = lyapunov.neighbor_row(j, i, pos, specs, graph, dyn)
        coeff = coeff + r * (row @ G)
        rhs -= r * float(row @ t.fbar)
    if mode == "full":
        if not np.allclose(t.Lg2V, np.eye(2)):
            raise NotImplementedError("full mode supports identity Lg2V only")
        return QuadraticConstraint(coeff, rhs)
    return LinearConstraint(coeff, rhs)


def inclusive_cost(i: int, states, specs, graph, dyn, params: ClassKParams, u_i, udot_i,
                   mode: str = "paper") -> float:
    """Left side of the multi-neighbor condition, ``b_i + sum_{j in N_i^-} r_ij a_ji(u_i)``."""
    pos = as_positions(states)
    total = lyapunov.b_i(i, pos, specs, graph, dyn, params, u_i, udot_i, mode=mode)
    for j in sorted(graph.out_neighbors(i)):
        total += relatedness(specs, i, j) * lyapunov.a_ij(j, i, pos, specs, graph, dyn, u_i)
    return total
