import re

import pytest

from cclf_altruism.config import parse_config
from cclf_altruism.plots import agent_colors, render_plots
from cclf_altruism.sim import AgentConfig, ScenarioConfig, TrajectoryLog, run_scenario


def test_eight_agent_plot_has_eight_paths_and_stars(tmp_path):
    cfg = parse_config("circle8_equal")
    log = run_scenario(ScenarioConfig(**{**cfg.__dict__, "t_final": 0.2}))
    paths = render_plots(log, tmp_path)
    svg = paths["trajectory_plot"].read_text()
    assert len(set(agent_colors(cfg))) == 8
    for c in ("#1f77b4", "#ff7f0e"):
        assert c in svg
    assert len(re.findall(r'id="line2d_', svg)) >= 3 * 8
    assert paths["phi2_plot"].exists()


def test_plots_are_deterministic(tmp_path):
    cfg = ScenarioConfig(agents=[AgentConfig((-1, 0.1), (1, 0.1)), AgentConfig((1, 0), (-1, 0))], t_final=0.5)
    log = run_scenario(cfg)
    a = render_plots(log, tmp_path / "a")
    b = render_plots(log, tmp_path / "b")
    for k in a:
        assert a[k].read_bytes() == b[k].read_bytes()


def test_empty_log_is_an_error(tmp_path):
    cfg = ScenarioConfig(agents=[AgentConfig((0, 0), (1, 0))])
    with pytest.raises(ValueError):
        render_plots(TrajectoryLog(cfg), tmp_path)
    assert not (tmp_path / "trajectories.svg").exists()
