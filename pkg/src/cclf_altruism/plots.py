"""SVG figures for a finished run: agent paths and the phi2 time series."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .sim import TrajectoryLog  # noqa: E402

TWO_AGENT_COLORS = ["tab:blue", "tab:red"]
MANY_AGENT_COLORS = ["tab:blue", "tab:orange", "tab:green", "tab:red",
                     "tab:purple", "tab:brown", "tab:pink", "tab:olive"]

# fixed ids and no timestamp so identical runs produce identical files
_RC = {"svg.hashsalt": "cclf-altruism", "svg.fonttype": "none", "font.size": 9}
_META = {"Date": None, "Creator": None}


def agent_colors(config) -> list[str]:
    palette = TWO_AGENT_COLORS if len(config.agents) == 2 else MANY_AGENT_COLORS
    return [a.color or palette[k % len(palette)] for k, a in enumerate(config.agents)]


def plot_trajectories(log: TrajectoryLog, ax=None):
    pos = log.positions()
    colors = agent_colors(log.config)
    if ax is None:
        _, ax = plt.subplots(figsize=(4, 4))
    for k, a in enumerate(log.config.agents):
        ax.plot(pos[:, k, 0], pos[:, k, 1], color=colors[k], lw=1.2, label=a.label or f"agent {k}")
        ax.plot(*a.start, "o", color=colors[k], ms=4)
        ax.plot(*a.goal, "*", color=colors[k], ms=11, mec="k", mew=0.4)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.grid(alpha=0.3)
    return ax


def plot_phi2(log: TrajectoryLog, axes=None):
    t = log.times
    phi2 = log.phi2()
    colors = agent_colors(log.config)
    if axes is None:
        _, axes = plt.subplots(2, 1, figsize=(5, 4.5), sharex=True)
    top, bottom = axes
    for k in range(phi2.shape[1]):
        top.plot(t, phi2[:, k], color=colors[k], lw=1.0)
    top.set_ylabel(r"$\phi^2_i$")
    bottom.plot(t, log.weighted_sums(), color="k", lw=1.0)
    bottom.axhline(0.0, color="gray", ls="--", lw=0.8)
    bottom.set_ylabel(r"$\sum_i w_i \phi^2_i$")
    bottom.set_xlabel("t [s]")
    for ax in axes:
        ax.grid(alpha=0.3)
    return axes


def render_plots(log: TrajectoryLog, out_dir) -> dict[str, Path]:
    if not log.records:
        raise ValueError("cannot plot an empty trajectory log")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"trajectory_plot": out / "trajectories.svg", "phi2_plot": out / "phi2.svg"}
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        plot_trajectories(log, ax)
        fig.tight_layout()
        fig.savefig(paths["trajectory_plot"], metadata=_META)
        plt.close(fig)

        fig, axes = plt.subplots(2, 1, figsize=(5, 4.5), sharex=True)
        plot_phi2(log, axes)
        fig.tight_layout()
        fig.savefig(paths["phi2_plot"], metadata=_META)
        plt.close(fig)
    return paths
