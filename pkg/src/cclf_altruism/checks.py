"""Randomized invariant checks against independent numerical oracles.

The finite-difference oracles perturb positions with the interaction graph
held fixed, and only ever evaluate the basic scalar fields (``V``, the drift,
``LfV = grad V . fbar``); they never call the analytic derivative code they
check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lyapunov, qpsolve
from .altruism import LinearConstraint
from .dynamics import AgentSpec, RepulsiveSingleIntegrator, repulsion_field, repulsion_jacobian
from .graph import build_proximity_graph

FD_STEP = 1e-5
FD_RTOL = 1e-5
FD_FLOOR = 1e-6


@dataclass
class CheckResult:
    name: str
    samples: int
    worst: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.worst <= self.tol

    def line(self) -> str:
        flag = "PASS" if self.ok else "FAIL"
        return f"{flag} {self.name}: worst={self.worst:.3e} tol={self.tol:.1e} samples={self.samples}"


def rel_err(a, b, floor: float = FD_FLOOR) -> float:
    a, b = np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float))
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), floor))


def random_configuration(rng, n=None, min_sep=0.3, box=2.0):
    """Random agents with pairwise separation at least ``min_sep``."""
    n = n if n is not None else int(rng.integers(2, 6))
    pos = []
    while len(pos) < n:
        p = rng.uniform(-box, box, 2)
        if all(np.linalg.norm(p - q) >= min_sep for q in pos):
            pos.append(p)
    pos = np.array(pos)
    specs = [AgentSpec(rng.uniform(-3, 3, 2), float(rng.uniform(0.1, 10)), 2.0) for _ in range(n)]
    gamma = float(rng.uniform(0.2, 2.0))
    delta = float(rng.uniform(1.0, 3.0))
    return pos, specs, gamma, build_proximity_graph(pos, delta)


def _moved(pos, k, v, h):
    p = pos.copy()
    p[k] = p[k] + h * np.asarray(v, float)
    return p


def fd_directional(fun, pos, k, v, h=FD_STEP):
    """Central difference of ``fun(positions)`` when agent ``k`` moves along ``v``."""
    return (np.asarray(fun(_moved(pos, k, v, h))) - np.asarray(fun(_moved(pos, k, v, -h)))) / (2 * h)


def fd_jacobian(fun, pos, k, h=FD_STEP):
    cols = [fd_directional(fun, pos, k, e, h) for e in np.eye(2)]
    return np.stack(cols, axis=-1)


def _V(i, specs):
    return lambda p: 0.5 * float((p[i] - specs[i].goal) @ (p[i] - specs[i].goal))


def _grad_V(i, specs):
    return lambda p: p[i] - specs[i].goal


def _LfV(i, specs, graph, gamma):
    return lambda p: float((p[i] - specs[i].goal) @ repulsion_field(i, p, graph, gamma))


def check_repulsion_jacobian(n_samples=1000, seed=0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    while count < n_samples:
        pos, specs, gamma, graph = random_configuration(rng)
        edges = sorted(graph.edges)
        if not edges:
            continue
        i, j = edges[int(rng.integers(len(edges)))]
        fd = fd_jacobian(lambda p: repulsion_field(i, p, graph, gamma), pos, j)
        worst = max(worst, rel_err(repulsion_jacobian(i, j, pos, gamma), fd))
        count += 1
    return CheckResult("repulsion_jacobian vs central differences", count, worst, FD_RTOL)


def check_lie_terms(n_samples=1000, seed=1) -> CheckResult:
    """Every Lie-derivative term and ``a_ij`` against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        pos, specs, gamma, graph = random_configuration(rng)
        dyn = RepulsiveSingleIntegrator(gamma)
        i = int(rng.integers(len(pos)))
        t = lyapunov.lie_terms(i, pos, specs, graph, dyn)
        fbar = repulsion_field(i, pos, graph, gamma)
        V, gV, LfV = _V(i, specs), _grad_V(i, specs), _LfV(i, specs, graph, gamma)
        lgv_fd = fd_jacobian(V, pos, i)
        errs = [
            rel_err(t.LfV, fd_directional(V, pos, i, fbar)),
            rel_err(t.LgV, lgv_fd),
            rel_err(t.Lf2V, fd_directional(LfV, pos, i, fbar)),
            # LfLgV^T + LgLfV: derivative of LgV along fbar plus gradient of LfV
            rel_err(t.cross, fd_directional(gV, pos, i, fbar) + fd_jacobian(LfV, pos, i)),
            rel_err(t.Lg2V, fd_jacobian(gV, pos, i)),
        ]
        for j in sorted(graph.in_neighbors(i)):
            u_j = rng.uniform(-2, 2, 2)
            xdot_j = repulsion_field(j, pos, graph, gamma) + u_j
            errs.append(rel_err(lyapunov.a_ij(i, j, pos, specs, graph, dyn, u_j),
                                fd_directional(LfV, pos, j, xdot_j)))
        worst = max(worst, *errs)
    return CheckResult("Lie-derivative terms vs central differences", n_samples, worst, FD_RTOL)


def check_decomposition(n_samples=1000, seed=2, tol=1e-9) -> CheckResult:
    """``full``-mode ``sum a_ij + b_i`` against the directly expanded ``phi2``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        pos, specs, gamma, graph = random_configuration(rng)
        dyn = RepulsiveSingleIntegrator(gamma)
        params = lyapunov.ClassKParams(float(rng.uniform(0, 3)), float(rng.uniform(0, 3)))
        u = rng.uniform(-2, 2, (len(pos), 2))
        i = int(rng.integers(len(pos)))
        udot = rng.uniform(-50, 50, 2)
        entry = lyapunov.phi_chain(i, pos, specs, graph, dyn, params, u[i], udot, u, mode="full")
        direct = lyapunov.phi2_expanded(i, pos, specs, graph, dyn, params, u[i], udot, u)
        scale = max(abs(direct), abs(entry.b), *(abs(a) for a in entry.a_terms.values()), 1e-12)
        worst = max(worst, abs(entry.phi2 - direct) / scale)
    return CheckResult("phi2 = sum a_ij + b_i (full mode)", n_samples, worst, tol)


def random_qp(rng) -> qpsolve.QpProblem:
    bound = float(rng.uniform(0.5, 1.0))
    rows = []
    for _ in range(int(rng.integers(0, 3))):
        a = rng.normal(size=2)
        rows.append(LinearConstraint(a, float(rng.uniform(-0.6, 0.6)) * np.linalg.norm(a)))
    return qpsolve.QpProblem(rng.uniform(-2, 2, 2), rows, bound)


def grid_oracle(problem: qpsolve.QpProblem, step=1e-3):
    """Best objective over a grid of feasible points, or ``None`` if none is feasible."""
    R = problem.norm_bound
    ax = np.arange(-R, R + step / 2, step)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    feas = X * X + Y * Y <= R * R
    for row in problem.rows:
        feas &= row.coeff[0] * X + row.coeff[1] * Y <= row.rhs
    if not feas.any():
        return None
    obj = (X - problem.target[0]) ** 2 + (Y - problem.target[1]) ** 2
    return float(obj[feas].min())


def check_qp_oracle(n_samples=500, seed=3, step=1e-3, obj_tol=1e-6, kkt_tol=1e-8):
    """Solver objective never worse than the grid oracle, and KKT residual small.

    Returns two results: objective agreement and KKT residual.
    """
    rng = np.random.default_rng(seed)
    worst_obj = 0.0
    worst_kkt = 0.0
    worst_gap = 0.0
    for _ in range(n_samples):
        prob = random_qp(rng)
        sol = qpsolve.solve(prob)
        grid = grid_oracle(prob, step)
        if sol.status != qpsolve.OPTIMAL:
            # a feasible grid point would contradict an infeasibility report
            worst_obj = max(worst_obj, np.inf if grid is not None else 0.0)
            continue
        viol = max([r.value(sol.u) for r in prob.rows] + [np.linalg.norm(sol.u) - prob.norm_bound])
        obj = prob.objective(sol.u)
        if grid is not None:
            worst_obj = max(worst_obj, obj - grid, viol)
            # the grid can only be off by its resolution
            worst_gap = max(worst_gap, (grid - obj) / (4 * step * (np.sqrt(obj) + 1)))
        worst_kkt = max(worst_kkt, qpsolve.kkt_residual(prob, sol))
    return (CheckResult("QP objective <= grid oracle + tol", n_samples, worst_obj, obj_tol),
            CheckResult("QP within grid resolution of oracle", n_samples, worst_gap, 1.0),
            CheckResult("QP KKT residual", n_samples, worst_kkt, kkt_tol))


def run_all(n_samples=100, qp_samples=50, seed=0) -> list[CheckResult]:
    out = [
        check_repulsion_jacobian(n_samples, seed),
        check_lie_terms(n_samples, seed + 1),
        check_decomposition(n_samples, seed + 2),
    ]
    out.extend(check_qp_oracle(qp_samples, seed + 3))
    return out
