"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances."""

import dataclasses
import time

import numpy as np
import pytest

from cclf_altruism import checks
from cclf_altruism.cli import main
from cclf_altruism.config import parse_config, shipped_scenarios
from cclf_altruism.outputs import RunManifest, write_outputs
from cclf_altruism.sim import AgentConfig, ScenarioConfig, run_scenario, theorem1_violations


def test_c1_theorem_audit_weighted_eight_agents(report):
    cfg = parse_config("circle8_weighted")
    assert [a.weight for a in cfg.agents] == [1e6, 1e3] + [1.0] * 6
    t0 = time.perf_counter()
    log = run_scenario(cfg)
    elapsed = time.perf_counter() - t0
    bad, relaxed = theorem1_violations(log, [a.weight for a in cfg.agents], tol=1e-6)
    audited = len(log.records) - len(relaxed)
    ok = not bad and elapsed < 10.0 and log.times[-1] == pytest.approx(15.0) and audited > 0
    report("C1 theorem audit", ok,
           f"{len(bad)} violations over {audited} all-optimal steps ({len(relaxed)} relaxed), runtime {elapsed:.2f}s")
    assert ok


def test_c2_goal_reaching_and_deadlock(report):
    worst = {}
    for name in ("swap_equal", "circle8_equal"):
        cfg = parse_config(name)
        assert all(a.weight == 1.0 for a in cfg.agents)
        worst[name] = float(run_scenario(cfg).final_distances().max())
    dead_cfg = parse_config("swap_symmetric_none")
    assert dead_cfg.condition == "none" and dead_cfg.agents[0].start[1] == dead_cfg.agents[1].start[1]
    dead = run_scenario(dead_cfg).deadlock_time()
    ok = all(d <= 0.05 for d in worst.values()) and dead is not None
    detail = ", ".join(f"{k} worst final distance {v:.4f} m" for k, v in worst.items())
    report("C2 goal reaching / deadlock", ok, f"{detail}; symmetric unfiltered swap deadlock at {dead} s")
    assert ok


def _sweep(base, weights):
    out = []
    for w in weights:
        agents = list(base.agents)
        agents[0] = dataclasses.replace(agents[0], weight=w)
        out.append(run_scenario(dataclasses.replace(base, agents=tuple(agents))))
    return out


def test_c3a_weight_asymmetry_path_ratio(report):
    cfg = parse_config("swap_weighted")
    assert cfg.agents[0].weight / cfg.agents[1].weight == pytest.approx(0.1)
    L = run_scenario(cfg).path_lengths()
    ratio = L[0] / L[1]
    ok = ratio >= 1.10
    report("C3 blue path >= 1.10 x red path (w ratio 0.1)", ok,
           f"blue {L[0]:.4f} m, red {L[1]:.4f} m, ratio {ratio:.4f}")
    assert ok


def test_c3b_detour_monotone_in_weight(report):
    base = parse_config("swap_weighted")
    red = base.agents[1].weight
    logs = _sweep(base, [0.1 * red, 1.0 * red, 10.0 * red])
    detours = [float(log.detours()[0]) for log in logs]
    ok = all(b <= a for a, b in zip(detours, detours[1:]))
    report("C3 blue detour nonincreasing in w_blue over {0.1,1,10}", ok,
           "detours " + ", ".join(f"{d:.4f}" for d in detours))
    assert ok


def test_c4_jacobian_and_lie_terms(report):
    jac = checks.check_repulsion_jacobian(1000, seed=11)
    lie = checks.check_lie_terms(1000, seed=12)
    ok = jac.worst <= 1e-5 and lie.worst <= 1e-5 and jac.samples == lie.samples == 1000
    report("C4 Jacobian / Lie terms vs central differences", ok,
           f"jacobian worst {jac.worst:.2e}, Lie terms worst {lie.worst:.2e} (tol 1e-5, 1000 samples each)")
    assert ok


def test_c5_decomposition_identity(report):
    res = checks.check_decomposition(1000, seed=13, tol=1e-9)
    report("C5 phi2 = sum a_ij + b_i (full mode)", res.ok, f"worst relative {res.worst:.2e} (tol 1e-9, 1000 samples)")
    assert res.ok


def test_c6_qp_oracle(report):
    obj, gap, kkt = checks.check_qp_oracle(500, seed=14, step=1e-3, obj_tol=1e-6, kkt_tol=1e-8)
    ok = obj.ok and gap.ok and kkt.ok
    report("C6 QP vs grid oracle", ok,
           f"objective excess {obj.worst:.2e} (tol 1e-6), grid gap/resolution {gap.worst:.2f} (<= 1), "
           f"KKT {kkt.worst:.2e} (tol 1e-8), 500 problems")
    assert ok


def test_c7_nominal_exponential_rate(report):
    cfg = ScenarioConfig(agents=[AgentConfig((3.0, -1.0), (0.0, 0.0))], dt=0.01, sigma1=1.0, t_final=5.0)
    log = run_scenario(cfg)
    V = np.array([r.phi[0].V for r in log.records])
    bound = V[0] * np.exp(-2 * 0.95 * log.times)
    excess = float(np.max(V / bound))
    ok = excess <= 1.0
    report("C7 V(t) <= V(0) exp(-2*0.95 t)", ok,
           f"max V/bound {excess:.3f}; V(1)/V(0) = {V[100] / V[0]:.4f} vs bound {np.exp(-1.9):.4f}")
    assert ok


def test_c8_determinism_and_audit(tmp_path, report, capsys):
    mismatched, audit_codes = [], {}
    for name, path in shipped_scenarios().items():
        cfg = parse_config(path)
        blobs = []
        for k in range(2):
            out = tmp_path / name / str(k)
            log = run_scenario(cfg)
            write_outputs(log, RunManifest.start(cfg), out)
            blobs.append((out / "trajectory.csv").read_bytes())
        if blobs[0] != blobs[1]:
            mismatched.append(name)
        audit_codes[name] = main(["audit", str(tmp_path / name / "0" / "trajectory.csv")])
    capsys.readouterr()
    ok = not mismatched and all(c == 0 for c in audit_codes.values())
    report("C8 determinism / audit round trip", ok,
           f"{len(audit_codes)} shipped scenarios, byte mismatches {mismatched or 'none'}, "
           f"audit exit codes {sorted(set(audit_codes.values()))} (tol 1e-9)")
    assert ok
