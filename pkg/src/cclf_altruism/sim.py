"""Closed-loop simulation of the altruism filter.

Each step rebuilds the proximity graph, computes every agent's nominal CLF
input against the same frozen snapshot, filters it through the agent's
altruism constraint, records the Lyapunov audit terms and integrates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import altruism, lyapunov, qpsolve
from .altruism import LinearConstraint
from .dynamics import AgentSpec, AgentState, RepulsiveSingleIntegrator, positions_of, step
from .graph import build_proximity_graph
from .lyapunov import ClassKParams, PhiEntry

CONDITIONS = ("cclf", "simple", "none")
ARRIVAL_TOL = 0.05
DEADLOCK_SPEED = 1e-4
DEADLOCK_WINDOW = 1.0
THEOREM_TOL = 1e-6


@dataclass(frozen=True)
class AgentConfig:
    start: tuple[float, float]
    goal: tuple[float, float]
    weight: float = 1.0
    u_max: float = 2.0
    label: str | None = None
    color: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    agents: tuple[AgentConfig, ...]
    gamma: float = 0.5
    delta: float = 1.0
    sigma1: float = 1.0
    sigma2: float = 1.0
    dt: float = 0.01
    t_final: float = 15.0
    mode: str = "paper"
    condition: str = "cclf"
    margin: float = 0.0
    udot_estimate: str = "backward"
    name: str = "scenario"
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        self.validate()

    def validate(self):
        if not self.agents:
            raise ValueError("agents: at least one agent is required")
        for k, a in enumerate(self.agents):
            if not a.weight > 0:
                raise ValueError(f"agents[{k}].weight must be positive, got {a.weight}")
            if not a.u_max > 0:
                raise ValueError(f"agents[{k}].u_max must be positive, got {a.u_max}")
            for key in ("start", "goal"):
                v = getattr(a, key)
                if len(v) != 2 or not all(math.isfinite(c) for c in v):
                    raise ValueError(f"agents[{k}].{key} must be two finite numbers")
        for key in ("gamma", "delta", "dt"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be positive, got {getattr(self, key)}")
        for key in ("sigma1", "sigma2", "margin"):
            if not getattr(self, key) >= 0:
                raise ValueError(f"{key} must be nonnegative, got {getattr(self, key)}")
        if not self.t_final >= self.dt:
            raise ValueError(f"t_final must be at least dt, got {self.t_final}")
        if self.mode not in lyapunov.MODES:
            raise ValueError(f"mode must be one of {lyapunov.MODES}, got {self.mode!r}")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.condition == "simple" and len(self.agents) != 2:
            raise ValueError("condition 'simple' requires exactly two agents")
        if self.udot_estimate not in altruism.UDOT_CONVENTIONS:
            raise ValueError(f"udot_estimate must be one of {altruism.UDOT_CONVENTIONS}")

    @property
    def n_steps(self) -> int:
        # records at t = 0, dt, ..., floor(t_final/dt) * dt; guard against 15/0.01 = 1499.999...
        return int(math.floor(self.t_final / self.dt + 1e-9))

    def specs(self) -> list[AgentSpec]:
        return [AgentSpec(np.array(a.goal, dtype=float), a.weight, a.u_max) for a in self.agents]

    def initial_states(self) -> list[AgentState]:
        return [AgentState(np.array(a.start, dtype=float)) for a in self.agents]

    def dynamics(self) -> RepulsiveSingleIntegrator:
        return RepulsiveSingleIntegrator(self.gamma)

    def class_k(self) -> ClassKParams:
        return ClassKParams(self.sigma1, self.sigma2)


@dataclass
class StepRecord:
    t: float
    positions: np.ndarray
    inputs: np.ndarray
    nominal: np.ndarray
    u_last: np.ndarray
    phi: list[PhiEntry]
    weighted_phi2_sum: float
    productivity: np.ndarray
    neighbor_effect: np.ndarray
    statuses: list[str]
    edges: frozenset


@dataclass
class TrajectoryLog:
    config: ScenarioConfig
    records: list[StepRecord] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def positions(self) -> np.ndarray:
        """Array of shape (steps, agents, 2)."""
        return np.array([r.positions for r in self.records])

    def phi2(self) -> np.ndarray:
        return np.array([[p.phi2 for p in r.phi] for r in self.records])

    def weighted_sums(self) -> np.ndarray:
        return np.array([r.weighted_phi2_sum for r in self.records])

    def path_lengths(self) -> np.ndarray:
        pos = self.positions()
        if len(pos) < 2:
            return np.zeros(len(self.config.agents))
        return np.linalg.norm(np.diff(pos, axis=0), axis=2).sum(axis=0)

    def detours(self) -> np.ndarray:
        straight = np.array([np.linalg.norm(np.subtract(a.goal, a.start)) for a in self.config.agents])
        return self.path_lengths() - straight

    def arrival_times(self, tol: float = ARRIVAL_TOL) -> list[float | None]:
        pos = self.positions()
        goals = np.array([a.goal for a in self.config.agents], dtype=float)
        dist = np.linalg.norm(pos - goals[None], axis=2)
        out = []
        for k in range(dist.shape[1]):
            hit = np.nonzero(dist[:, k] <= tol)[0]
            out.append(float(self.records[hit[0]].t) if len(hit) else None)
        return out

    def final_distances(self) -> np.ndarray:
        goals = np.array([a.goal for a in self.config.agents], dtype=float)
        return np.linalg.norm(self.records[-1].positions - goals, axis=1)

    def deadlock_time(self, window: float = DEADLOCK_WINDOW, speed: float = DEADLOCK_SPEED,
                      tol: float = ARRIVAL_TOL) -> float | None:
        """First time the mean agent speed over the trailing window falls below
        ``speed`` while some agent is still off its goal."""
        pos = self.positions()
        if len(pos) < 2:
            return None
        dt = self.config.dt
        speeds = np.linalg.norm(np.diff(pos, axis=0), axis=2).mean(axis=1) / dt
        w = max(1, int(round(window / dt)))
        goals = np.array([a.goal for a in self.config.agents], dtype=float)
        off = (np.linalg.norm(pos - goals[None], axis=2) > tol).any(axis=1)
        csum = np.concatenate([[0.0], np.cumsum(speeds)])
        for k in range(w, len(speeds) + 1):
            if off[k] and (csum[k] - csum[k - w]) / w < speed:
                return float(self.records[k].t)
        return None


def productivity(i: int, states, specs, u_i) -> float:
    pos = lyapunov.as_positions(states)
    return float((specs[i].goal - pos[i]) @ np.asarray(u_i, dtype=float))


def neighbor_effect(i: int, states, specs, graph, gamma: float) -> float:
    pos = lyapunov.as_positions(states)
    fbar = RepulsiveSingleIntegrator(gamma).drift(i, pos, graph)
    return float((specs[i].goal - pos[i]) @ fbar)


def _fallback(row, u_max: float, u_nom: np.ndarray) -> np.ndarray:
    """Point of the input ball that least violates ``row``."""
    if isinstance(row, LinearConstraint):
        if row.is_pure_rhs:
            return u_nom.copy()
        a = row.normalized().coeff
        return -u_max * a
    c = row.center
    nc = float(np.linalg.norm(c))
    return c.copy() if nc <= u_max else c * (u_max / nc)


def filter_input(i: int, config: ScenarioConfig, states, specs, graph, u_nom: np.ndarray):
    """Project the nominal input onto agent ``i``'s altruism constraint."""
    if config.condition == "none":
        return u_nom.copy(), qpsolve.OPTIMAL
    dyn = config.dynamics()
    if config.condition == "simple":
        row = altruism.simple_altruism_constraint(i, 1 - i, states, specs, graph, dyn)
    else:
        row = altruism.cclf_altruism_constraint(
            i, states, specs, graph, dyn, config.class_k(), config.dt,
            u_last=states[i].u_last, mode=config.mode, margin=config.margin,
            udot_convention=config.udot_estimate)
    sol = qpsolve.solve(qpsolve.QpProblem(u_nom, [row], specs[i].u_max))
    if sol.status == qpsolve.OPTIMAL:
        return sol.u, sol.status
    return _fallback(row, specs[i].u_max, u_nom), qpsolve.RELAXED


def step_once(config: ScenarioConfig, states: list[AgentState], t: float, specs=None):
    """Decide, audit and integrate one step; returns ``(new_states, record)``."""
    specs = specs if specs is not None else config.specs()
    dyn = config.dynamics()
    params = config.class_k()
    n = len(states)
    pos = positions_of(states)
    graph = build_proximity_graph(pos, config.delta)

    nominal = np.zeros((n, 2))
    statuses = []
    for i in range(n):
        sol = qpsolve.nominal_control(i, pos, specs, graph, dyn, params)
        nominal[i] = sol.u
    inputs = np.zeros((n, 2))
    for i in range(n):
        inputs[i], status = filter_input(i, config, states, specs, graph, nominal[i])
        statuses.append(status)

    u_last = np.array([s.u_last for s in states])
    phi = []
    for i in range(n):
        udot = altruism.estimate_udot(inputs[i], u_last[i], config.dt, config.udot_estimate)
        phi.append(lyapunov.phi_chain(i, pos, specs, graph, dyn, params, inputs[i], udot, inputs,
                                      mode=config.mode))
    weights = np.array([s.weight for s in specs])
    record = StepRecord(
        t=t,
        positions=pos,
        inputs=inputs,
        nominal=nominal,
        u_last=u_last,
        phi=phi,
        weighted_phi2_sum=float(sum(w * p.phi2 for w, p in zip(weights, phi))),
        productivity=np.array([productivity(i, pos, specs, inputs[i]) for i in range(n)]),
        neighbor_effect=np.array([neighbor_effect(i, pos, specs, graph, config.gamma) for i in range(n)]),
        statuses=statuses,
        edges=graph.edges,
    )
    new_states = step(states, specs, inputs, config.dt, graph, config.gamma)
    return new_states, record


def run_scenario(config: ScenarioConfig) -> TrajectoryLog:
    specs = config.specs()
    states = config.initial_states()
    log = TrajectoryLog(config)
    for k in range(config.n_steps + 1):
        new_states, rec = step_once(config, states, k * config.dt, specs=specs)
        log.records.append(rec)
        states = new_states
    return log


def theorem1_audit(log: TrajectoryLog, weights) -> list[float]:
    """Per-step importance-weighted sum of ``phi2`` recomputed from the records."""
    w = np.asarray(weights, dtype=float)
    return [float(sum(wi * p.phi2 for wi, p in zip(w, r.phi))) for r in log.records]


def theorem1_scale(record: StepRecord, weights) -> float:
    return max(1.0, float(sum(w * abs(p.b) for w, p in zip(weights, record.phi))))


def theorem1_violations(log: TrajectoryLog, weights, tol: float = THEOREM_TOL):
    """Steps where every agent was ``optimal`` yet the weighted sum exceeds
    ``tol`` times the step scale. Returns ``(violating_steps, relaxed_steps)``."""
    sums = theorem1_audit(log, weights)
    bad, relaxed = [], []
    for k, (r, s) in enumerate(zip(log.records, sums)):
        if any(st != qpsolve.OPTIMAL for st in r.statuses):
            relaxed.append(k)
        elif s > tol * theorem1_scale(r, weights):
            bad.append(k)
    return bad, relaxed
