"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 invariant-suite
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks
from .config import ConfigError, parse_config, shipped_scenarios
from .dynamics import SingularityError
from .graph import DegenerateGeometryError
from .outputs import RunManifest, audit_trajectory, fmt, write_outputs
from .plots import render_plots
from .sim import run_scenario, theorem1_violations

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("cclf_altruism")


def _run(args):
    config = parse_config(args.config)
    out = Path(args.out) if args.out else Path("runs") / config.name
    manifest = RunManifest.start(config)
    traj = run_scenario(config)
    manifest.finish()
    manifest.outputs.update({k: p.name for k, p in render_plots(traj, out).items()})
    files = write_outputs(traj, manifest, out)
    weights = [a.weight for a in config.agents]
    bad, relaxed = theorem1_violations(traj, weights)
    arrivals = traj.arrival_times()
    print(f"scenario {config.name}: {len(traj.records)} steps, {len(config.agents)} agents")
    for k, (a, L) in enumerate(zip(arrivals, traj.path_lengths())):
        print(f"  agent {k}: arrival={'-' if a is None else f'{a:.2f}s'} path={L:.3f}m")
    dead = traj.deadlock_time()
    if dead is not None:
        print(f"  deadlock detected at t={dead:.2f}s")
    print(f"  theorem audit: {len(bad)} violating steps, {len(relaxed)} relaxed steps excluded")
    for p in files.values():
        print(f"  wrote {p}")
    return EXIT_OK


def _audit(args):
    sums, logged = audit_trajectory(args.trajectory, args.manifest)
    print(f"recomputed {len(sums)} weighted phi2 sums; max={sums.max():.6g}")
    if logged is None:
        print("no metrics.csv next to the trajectory; nothing to cross-check")
        return EXIT_OK
    if len(logged) != len(sums):
        print(f"step count mismatch: logged {len(logged)}, recomputed {len(sums)}")
        return EXIT_INVARIANT
    err = np.abs(sums - logged) / np.maximum(1.0, np.abs(logged))
    worst = float(err.max())
    ok = worst <= 1e-9
    print(f"{'PASS' if ok else 'FAIL'} audit round trip: worst relative difference {worst:.3e} (tol 1e-9)")
    return EXIT_OK if ok else EXIT_INVARIANT


def _sweep(args):
    base = parse_config(args.config)
    try:
        weights = [float(w) for w in args.weights.split(",") if w.strip()]
    except ValueError:
        raise ConfigError(f"--weights must be a comma-separated list of numbers, got {args.weights!r}")
    k = args.agent
    if not 0 <= k < len(base.agents):
        raise ConfigError(f"--agent {k} out of range for {len(base.agents)} agents")
    n = len(base.agents)
    header = ["weight"] + [f"path_{i}" for i in range(n)] + [f"arrival_{i}" for i in range(n)] + [f"detour_{k}"]
    rows = []
    for w in weights:
        agents = list(base.agents)
        agents[k] = dataclasses.replace(agents[k], weight=w)
        traj = run_scenario(dataclasses.replace(base, agents=tuple(agents)))
        arr = traj.arrival_times()
        rows.append([fmt(w)] + [fmt(p) for p in traj.path_lengths()]
                    + ["" if a is None else fmt(a) for a in arr] + [fmt(traj.detours()[k])])
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "sweep.csv").open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows([header] + rows)
    detours = [float(r[-1]) for r in rows]
    order = np.argsort(weights, kind="stable")
    mono = all(detours[order[m + 1]] <= detours[order[m]] for m in range(len(order) - 1))
    print(f"# detour of agent {k} nonincreasing in its weight: {mono}", file=sys.stderr)
    return EXIT_OK


def _list(args):
    for name, path in shipped_scenarios().items():
        print(f"{name}\t{parse_config(path).notes}")
    return EXIT_OK


def _check(args):
    results = checks.run_all(args.samples, args.qp_samples, args.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.ok for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cclf-altruism", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario, write CSVs, manifest and plots")
    r.add_argument("config", help="scenario file or shipped scenario name")
    r.add_argument("--out", help="output directory (default runs/<scenario name>)")
    r.set_defaults(func=_run)

    a = sub.add_parser("audit", help="recompute weighted phi2 sums from a trajectory CSV")
    a.add_argument("trajectory")
    a.add_argument("--manifest", help="run manifest (default: manifest.json beside the CSV)")
    a.set_defaults(func=_audit)

    s = sub.add_parser("sweep", help="re-run a scenario over one agent's weight")
    s.add_argument("config", help="scenario file or shipped scenario name")
    s.add_argument("--weights", required=True, help="comma-separated weights, e.g. 0.1,1,10")
    s.add_argument("--agent", type=int, default=0, help="agent whose weight is swept (default 0)")
    s.add_argument("--out", help="also write sweep.csv here")
    s.set_defaults(func=_sweep)

    ls = sub.add_parser("list", help="list shipped scenarios")
    ls.set_defaults(func=_list)

    c = sub.add_parser("check", help="run the randomized invariant suite")
    c.add_argument("--samples", type=int, default=100)
    c.add_argument("--qp-samples", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_check)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SingularityError, DegenerateGeometryError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
