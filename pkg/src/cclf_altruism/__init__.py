"""Altruistic decision-making for multi-agent systems via collaborative CLFs.

Agents weigh the cost of an input to their own goal-reaching against its
benefit to neighbors, scaled by relative task importance, and filter their
nominal goal-seeking input accordingly.
"""

__version__ = "0.1.0"

from .graph import InteractionGraph, build_proximity_graph, in_neighbors, out_neighbors  # noqa: E402
from .dynamics import AgentSpec, AgentState, CouplingParams, RepulsiveSingleIntegrator  # noqa: E402
from .lyapunov import ClassKParams, PhiEntry  # noqa: E402
from .altruism import LinearConstraint, QuadraticConstraint, hamilton_holds, relatedness  # noqa: E402
from .qpsolve import QpProblem, QpSolution, solve  # noqa: E402
from .sim import AgentConfig, ScenarioConfig, TrajectoryLog, run_scenario, theorem1_audit  # noqa: E402

__all__ = [
    "InteractionGraph", "build_proximity_graph", "in_neighbors", "out_neighbors",
    "AgentSpec", "AgentState", "CouplingParams", "RepulsiveSingleIntegrator",
    "ClassKParams", "PhiEntry",
    "LinearConstraint", "QuadraticConstraint", "hamilton_holds", "relatedness",
    "QpProblem", "QpSolution", "solve",
    "AgentConfig", "ScenarioConfig", "TrajectoryLog", "run_scenario", "theorem1_audit",
]
