"""Goal-reaching Lyapunov terms for the networked single integrators.

Every agent uses ``V_i = 0.5 |x_i* - x_i|^2``. Its second time derivative
splits into a part driven by each in-neighbor's motion (``a_ij``) and a part
driven by the agent's own input and input rate (``b_i``):

    phi2_i = sum_{j in N_i^+} a_ij(u_j) + b_i(u_i, udot_i)

Derivatives inside ``Lf2V``, ``q_i`` and ``c_i`` are taken with respect to the
agent's own state only; everything coming from neighbor states is in ``a_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import AgentSpec, AgentState, ControlAffineDynamics
from .graph import InteractionGraph

MODES = ("paper", "full")


@dataclass(frozen=True)
class ClassKParams:
    sigma1: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("class-K gains must be nonnegative")


@dataclass(frozen=True)
class LieTerms:
    V: float
    LfV: float
    LgV: np.ndarray
    Lf2V: float
    cross: np.ndarray  # LfLgV^T + LgLfV
    Lg2V: np.ndarray
    fbar: np.ndarray


@dataclass(frozen=True)
class PhiEntry:
    V: float
    phi1: float
    phi2: float
    b: float
    a_terms: dict[int, float]


def as_positions(states) -> np.ndarray:
    if len(states) and isinstance(states[0], AgentState):
        return np.array([s.x for s in states], dtype=float)
    return np.asarray(states, dtype=float).reshape(-1, 2)


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def clf_value(x, goal) -> float:
    e = np.asarray(x, dtype=float) - np.asarray(goal, dtype=float)
    return 0.5 * float(e @ e)


def clf_gradient(x, goal) -> np.ndarray:
    return np.asarray(x, dtype=float) - np.asarray(goal, dtype=float)


def lie_terms(i: int, states, specs: Sequence[AgentSpec], graph: InteractionGraph,
              dyn: ControlAffineDynamics) -> LieTerms:
    pos = as_positions(states)
    e = clf_gradient(pos[i], specs[i].goal)
    G = dyn.input_matrix(i)
    fbar = dyn.drift(i, pos, graph)
    J = dyn.drift_jacobian(i, i, pos, graph)
    grad_LfV = fbar + J.T @ e  # d(e^T fbar)/dx_i
    return LieTerms(
        V=0.5 * float(e @ e),
        LfV=float(e @ fbar),
        LgV=e @ G,
        Lf2V=float(grad_LfV @ fbar),
        cross=G.T @ fbar + G.T @ grad_LfV,
        Lg2V=G.T @ G,
        fbar=fbar,
    )


def neighbor_row(i: int, j: int, states, specs, graph, dyn) -> np.ndarray:
    """Gradient of ``LfV_i`` with respect to ``x_j``: ``(x_i - x_i*)^T dfbar_i/dx_j``."""
    pos = as_positions(states)
    if j not in graph.in_neighbors(i):
        raise ValueError(f"agent {j} is not an in-neighbor of agent {i}")
    e = clf_gradient(pos[i], specs[i].goal)
    return e @ dyn.drift_jacobian(i, j, pos, graph)


def a_ij(i: int, j: int, states, specs, graph, dyn, u_j) -> float:
    """Contribution of in-neighbor ``j``'s motion to ``phi2_i``."""
    pos = as_positions(states)
    row = neighbor_row(i, j, pos, specs, graph, dyn)
    xdot_j = dyn.drift(j, pos, graph) + dyn.input_matrix(j) @ np.asarray(u_j, dtype=float)
    return float(row @ xdot_j)


def q_and_c(i: int, states, specs, graph, dyn, params: ClassKParams, terms: LieTerms | None = None):
    t = terms if terms is not None else lie_terms(i, states, specs, graph, dyn)
    s = params.sigma1 + params.sigma2
    q = t.cross + s * t.LgV
    c = t.Lf2V + s * t.LfV + params.sigma1 * params.sigma2 * t.V
    return q, float(c)


def b_i(i: int, states, specs, graph, dyn, params: ClassKParams, u_i, udot_i,
        mode: str = "paper", terms: LieTerms | None = None) -> float:
    """Self-attributable part of ``phi2_i``.

    ``paper`` mode drops the ``u^T Lg2V u`` term, ``full`` keeps it.
    """
    _check_mode(mode)
    t = terms if terms is not None else lie_terms(i, states, specs, graph, dyn)
    q, c = q_and_c(i, states, specs, graph, dyn, params, terms=t)
    u = np.asarray(u_i, dtype=float)
    val = float(q @ u) + float(t.LgV @ np.asarray(udot_i, dtype=float)) + c
    if mode == "full":
        val += float(u @ t.Lg2V @ u)
    return val


def phi_chain(i: int, states, specs, graph, dyn, params: ClassKParams, u_i, udot_i,
              u_all, mode: str = "paper") -> PhiEntry:
    """Evaluate ``V``, ``phi1``, ``phi2`` and the ``a``/``b`` split for agent ``i``.

    ``u_all`` holds every agent's input (indexed by agent); only the
    in-neighbors' rows are read.
    """
    pos = as_positions(states)
    t = lie_terms(i, pos, specs, graph, dyn)
    u = np.asarray(u_i, dtype=float)
    Vdot = t.LfV + float(t.LgV @ u)
    b = b_i(i, pos, specs, graph, dyn, params, u, udot_i, mode=mode, terms=t)
    a_terms = {j: a_ij(i, j, pos, specs, graph, dyn, u_all[j]) for j in sorted(graph.in_neighbors(i))}
    return PhiEntry(
        V=t.V,
        phi1=Vdot + params.sigma1 * t.V,
        phi2=b + sum(a_terms.values()),
        b=b,
        a_terms=a_terms,
    )


def phi2_expanded(i: int, states, specs, graph, dyn, params: ClassKParams, u_i, udot_i,
                  u_all) -> float:
    """``phi2_i`` from the chain rule on ``V`` directly, without the a/b split.

    Uses ``Vddot = xdot_i^T xdot_i + e^T d(xdot_i)/dt`` with
    ``d(xdot_i)/dt = sum_k dfbar_i/dx_k xdot_k + G udot``; this is the
    ``full`` mode value.
    """
    pos = as_positions(states)
    e = clf_gradient(pos[i], specs[i].goal)
    xdot = {k: dyn.drift(k, pos, graph) + dyn.input_matrix(k) @ np.asarray(u_all[k] if k != i else u_i, dtype=float)
            for k in {i} | graph.in_neighbors(i)}
    accel = dyn.input_matrix(i) @ np.asarray(udot_i, dtype=float)
    for k, v in xdot.items():
        accel = accel + dyn.drift_jacobian(i, k, pos, graph) @ v
    V = 0.5 * float(e @ e)
    Vdot = float(e @ xdot[i])
    Vddot = float(xdot[i] @ xdot[i]) + float(e @ accel)
    s1, s2 = params.sigma1, params.sigma2
    return Vddot + (s1 + s2) * Vdot + s1 * s2 * V
