"""CSV/JSON persistence of simulation runs and the replay audit."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, altruism, lyapunov
from .config import config_from_dict, config_hash, config_to_dict
from .graph import build_proximity_graph
from .sim import TrajectoryLog, theorem1_scale

TRAJECTORY_COLUMNS = ["t", "agent", "x", "y", "ux", "uy", "unom_x", "unom_y",
                      "V", "phi1", "phi2", "P", "Q", "status"]
METRICS_COLUMNS = ["t", "weighted_phi2_sum", "theorem_scale", "all_optimal"]

TRAJECTORY_FILE = "trajectory.csv"
METRICS_FILE = "metrics.csv"
MANIFEST_FILE = "manifest.json"


@dataclass
class RunManifest:
    config_hash: str
    version: str
    started: str
    finished: str = ""
    outputs: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @classmethod
    def start(cls, config) -> "RunManifest":
        return cls(config_hash(config), __version__, _now(), config=config_to_dict(config))

    def finish(self):
        self.finished = _now()


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def fmt(v) -> str:
    """Shortest decimal that round-trips to the same IEEE-754 double."""
    return repr(float(v))


def write_outputs(log: TrajectoryLog, manifest: RunManifest, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        traj = out / TRAJECTORY_FILE
        with traj.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_COLUMNS)
            for r in log.records:
                for i, p in enumerate(r.phi):
                    w.writerow([fmt(r.t), i, fmt(r.positions[i, 0]), fmt(r.positions[i, 1]),
                                fmt(r.inputs[i, 0]), fmt(r.inputs[i, 1]),
                                fmt(r.nominal[i, 0]), fmt(r.nominal[i, 1]),
                                fmt(p.V), fmt(p.phi1), fmt(p.phi2),
                                fmt(r.productivity[i]), fmt(r.neighbor_effect[i]), r.statuses[i]])
        weights = [a.weight for a in log.config.agents]
        metrics = out / METRICS_FILE
        with metrics.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_COLUMNS)
            for r in log.records:
                w.writerow([fmt(r.t), fmt(r.weighted_phi2_sum), fmt(theorem1_scale(r, weights)),
                            int(all(s == "optimal" for s in r.statuses))])
        manifest.outputs.update({"trajectory": traj.name, "metrics": metrics.name})
        man = out / MANIFEST_FILE
        man.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing outputs under {out}: {exc}") from exc
    return {"trajectory": traj, "metrics": metrics, "manifest": man}


def read_trajectory(path):
    """Load a trajectory CSV into ``(times, positions, inputs, statuses)`` arrays."""
    rows = list(csv.DictReader(Path(path).open(newline="")))
    if not rows:
        raise ValueError(f"{path}: empty trajectory")
    n = 1 + max(int(r["agent"]) for r in rows)
    if len(rows) % n:
        raise ValueError(f"{path}: row count {len(rows)} is not a multiple of {n} agents")
    steps = len(rows) // n
    times = np.empty(steps)
    pos = np.empty((steps, n, 2))
    u = np.empty((steps, n, 2))
    statuses = [[""] * n for _ in range(steps)]
    for k, r in enumerate(rows):
        s, i = divmod(k, n)
        if int(r["agent"]) != i:
            raise ValueError(f"{path}: row {k + 2} has agent {r['agent']}, expected {i}")
        times[s] = float(r["t"])
        pos[s, i] = float(r["x"]), float(r["y"])
        u[s, i] = float(r["ux"]), float(r["uy"])
        statuses[s][i] = r["status"]
    return times, pos, u, statuses


def read_metrics(path) -> np.ndarray:
    rows = list(csv.DictReader(Path(path).open(newline="")))
    return np.array([float(r["weighted_phi2_sum"]) for r in rows])


def audit_trajectory(trajectory_csv, manifest_path=None):
    """Recompute the weighted ``phi2`` sums from logged states and inputs.

    Goals, weights and parameters come from the run manifest (by default the
    ``manifest.json`` next to the CSV). Returns ``(recomputed, logged)``; the
    logged array is ``None`` when no metrics file is present.
    """
    trajectory_csv = Path(trajectory_csv)
    manifest_path = Path(manifest_path) if manifest_path else trajectory_csv.parent / MANIFEST_FILE
    manifest = json.loads(manifest_path.read_text())
    config = config_from_dict(manifest["config"], str(manifest_path))
    specs = config.specs()
    dyn = config.dynamics()
    params = config.class_k()
    weights = np.array([s.weight for s in specs])

    _, pos, u, _ = read_trajectory(trajectory_csv)
    if pos.shape[1] != len(specs):
        raise ValueError("trajectory agent count does not match the manifest")
    sums = np.empty(len(pos))
    for k in range(len(pos)):
        graph = build_proximity_graph(pos[k], config.delta)
        u_last = u[k - 1] if k else np.zeros_like(u[0])
        total = 0.0
        for i in range(len(specs)):
            udot = altruism.estimate_udot(u[k, i], u_last[i], config.dt, config.udot_estimate)
            entry = lyapunov.phi_chain(i, pos[k], specs, graph, dyn, params, u[k, i], udot, u[k],
                                       mode=config.mode)
            total += weights[i] * entry.phi2
        sums[k] = total
    metrics_path = trajectory_csv.parent / METRICS_FILE
    logged = read_metrics(metrics_path) if metrics_path.exists() else None
    return sums, logged
