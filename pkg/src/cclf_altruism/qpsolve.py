"""Exact minimum-distance QPs in the plane.

Problems have the form ``min |u - target|^2`` subject to a few affine rows,
optional ball constraints and an optional input-norm bound. The optimum of a
convex problem in two dimensions has at most two active constraints, so every
candidate (the target itself, its projection onto each boundary, and each
pairwise boundary intersection) is enumerated and the best feasible one kept.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import lyapunov
from .altruism import LinearConstraint, QuadraticConstraint

FEAS_TOL = 1e-10
ACTIVE_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
RELAXED = "relaxed"

Constraint = Union[LinearConstraint, QuadraticConstraint]


@dataclass(frozen=True)
class QpProblem:
    target: np.ndarray
    rows: Sequence[Constraint] = ()
    norm_bound: float | None = None

    def __post_init__(self):
        t = np.asarray(self.target, dtype=float).reshape(2)
        if not np.all(np.isfinite(t)):
            raise ValueError("target must be finite")
        if self.norm_bound is not None and not self.norm_bound > 0:
            raise ValueError(f"norm bound must be positive, got {self.norm_bound}")
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "rows", tuple(self.rows))

    def objective(self, u) -> float:
        d = np.asarray(u, dtype=float) - self.target
        return float(d @ d)


@dataclass(frozen=True)
class QpSolution:
    u: np.ndarray | None
    status: str
    active_rows: frozenset = field(default_factory=frozenset)


# Internal geometry: ("half", a, b) with |a| = 1 meaning a@u <= b,
# ("ball", c, R) meaning |u - c| <= R. Index -1 marks the norm bound.


def _canonical(problem: QpProblem):
    sets = []
    for k, row in enumerate(problem.rows):
        if isinstance(row, QuadraticConstraint):
            r2 = row.radius_sq
            if r2 < 0:
                return None
            sets.append((k, "ball", row.center, float(np.sqrt(r2))))
        else:
            if row.trivially_feasible:
                continue
            if row.trivially_infeasible:
                return None
            nrow = row.normalized()
            sets.append((k, "half", nrow.coeff, nrow.rhs))
    if problem.norm_bound is not None:
        sets.append((-1, "ball", np.zeros(2), float(problem.norm_bound)))
    return sets


def _violation(s, u):
    _, kind, p, v = s
    if kind == "half":
        return p[0] * u[0] + p[1] * u[1] - v
    return math.hypot(u[0] - p[0], u[1] - p[1]) - v


def _project(s, t):
    _, kind, p, v = s
    if kind == "half":
        return [t - (float(p @ t) - v) * p]
    d = t - p
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        return [p + np.array([-v, 0.0])]
    return [p + v * d / nd]


def _intersect(s1, s2):
    _, k1, p1, v1 = s1
    _, k2, p2, v2 = s2
    if k1 == "half" and k2 == "half":
        A = np.array([p1, p2])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) < 1e-14:
            return []
        return [np.linalg.solve(A, np.array([v1, v2]))]
    if k1 == "ball" and k2 == "half":
        s1, s2 = s2, s1
        _, k1, p1, v1 = s1
        _, k2, p2, v2 = s2
    if k1 == "half":
        # line a@u = b against circle |u - c| = R
        a, b, c, R = p1, v1, p2, v2
        foot = c + (b - float(a @ c)) * a
        h2 = R * R - float((foot - c) @ (foot - c))
        if h2 < -1e-12 * max(1.0, R * R):
            return []
        h = np.sqrt(max(h2, 0.0))
        tang = np.array([-a[1], a[0]])
        return [foot + h * tang, foot - h * tang]
    # two circles
    d = p2 - p1
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        return []
    x = (dist * dist + v1 * v1 - v2 * v2) / (2.0 * dist)
    h2 = v1 * v1 - x * x
    if h2 < -1e-12 * max(1.0, v1 * v1):
        return []
    h = np.sqrt(max(h2, 0.0))
    ex = d / dist
    ey = np.array([-ex[1], ex[0]])
    base = p1 + x * ex
    return [base + h * ey, base - h * ey]


def _feasible(sets, u):
    return all(_violation(s, u) <= FEAS_TOL for s in sets)


def solve(problem: QpProblem) -> QpSolution:
    sets = _canonical(problem)
    if sets is None:
        return QpSolution(None, INFEASIBLE)
    t = problem.target
    candidates = [t]
    for s in sets:
        candidates.extend(_project(s, t))
    for s1, s2 in itertools.combinations(sets, 2):
        candidates.extend(_intersect(s1, s2))
    best = None
    best_key = None
    for u in candidates:
        if not (math.isfinite(u[0]) and math.isfinite(u[1]) and _feasible(sets, u)):
            continue
        key = (problem.objective(u), float(u[0]), float(u[1]))
        if best_key is None or key < best_key:
            best, best_key = u, key
    if best is None:
        return QpSolution(None, INFEASIBLE)
    active = frozenset(s[0] for s in sets if abs(_violation(s, best)) <= ACTIVE_TOL)
    return QpSolution(np.array(best, dtype=float), OPTIMAL, active)


def project_halfspace(target, row: LinearConstraint) -> np.ndarray:
    """Closest point to ``target`` in the half-plane ``row``."""
    t = np.asarray(target, dtype=float)
    if row.is_pure_rhs:
        if row.rhs < 0:
            raise ValueError("pure-rhs row with negative rhs is infeasible")
        return t.copy()
    viol = float(row.coeff @ t) - row.rhs
    if viol <= 0:
        return t.copy()
    return t - viol / float(row.coeff @ row.coeff) * row.coeff


def kkt_residual(problem: QpProblem, sol: QpSolution) -> float:
    """Distance from ``target - u`` to the cone spanned by active outward normals."""
    sets = {s[0]: s for s in _canonical(problem) or []}
    u = sol.u
    g = problem.target - u
    normals = []
    for k in sorted(sol.active_rows):
        _, kind, p, v = sets[k]
        if kind == "half":
            normals.append(p)
        else:
            n = u - p
            normals.append(n / max(float(np.linalg.norm(n)), 1e-300))
    best = float(np.linalg.norm(g))
    for r in range(1, len(normals) + 1):
        for sub in itertools.combinations(normals, r):
            N = np.array(sub).T
            lam, *_ = np.linalg.lstsq(N, g, rcond=None)
            if np.all(lam >= -1e-12):
                best = min(best, float(np.linalg.norm(N @ np.maximum(lam, 0.0) - g)))
    return best


def nominal_control(i: int, states, specs, graph, dyn, params: lyapunov.ClassKParams) -> QpSolution:
    """Minimum-norm input meeting ``LfV + LgV u + sigma1 V <= 0`` within ``u_max``.

    If the condition cannot be met inside the bound, returns the saturated
    steepest-descent input with status ``relaxed``.
    """
    t = lyapunov.lie_terms(i, states, specs, graph, dyn)
    row = LinearConstraint(t.LgV, -t.LfV - params.sigma1 * t.V)
    u_max = specs[i].u_max
    sol = solve(QpProblem(np.zeros(2), [row], u_max))
    if sol.status == OPTIMAL:
        return sol
    n = float(np.linalg.norm(t.LgV))
    u = -u_max * t.LgV / n if n > 0 else np.zeros(2)
    return QpSolution(u, RELAXED)
