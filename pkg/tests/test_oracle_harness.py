import json
import os
import subprocess
import sys

import numpy as np
import pytest

from tdlab.envs import MdpSpec, generate_random_mdp, ring_mdp, swap_chain
from tdlab.errors import ConfigError
from tdlab.harness import rng as rngmod
from tdlab.harness.cli import main
from tdlab.harness.config import (
    RunConfig,
    apply_overrides,
    parse_config,
    parse_grid,
    resolve_output_dir,
)
from tdlab.harness.emit import HEADER, emit, parse_csv, to_csv
from tdlab.harness.runner import RunMetrics, run_experiment, run_seed
from tdlab.harness.stats import confidence_interval, rolling_stats
from tdlab.oracle import (
    average_reward_oracle,
    bellman_residual,
    finite_diff_gradient,
    stationary_distribution,
    value_iteration,
)


def _single_state(r, gamma):
    P = np.ones((1, 1, 1, 1))
    return MdpSpec(P, np.array([r]), gamma)


# -- oracle -------------------------------------------------------------------

def test_value_iteration_geometric_series():
    q = value_iteration(_single_state(1.0, 0.5), 1e-12)
    assert q[0, 0] == pytest.approx(2.0, abs=1e-10)


def test_value_iteration_gamma_zero_is_expected_reward():
    spec = generate_random_mdp(5, 4, 2, gamma=0.0)
    expected = np.einsum("sakr,r->sa", spec.transition, spec.rewards)
    assert np.allclose(value_iteration(spec), expected, atol=1e-14)


def test_value_iteration_residual_and_gamma_one():
    spec = generate_random_mdp(6, 6, 3, gamma=0.95)
    assert bellman_residual(spec, value_iteration(spec)) < 1e-9
    with pytest.raises(ConfigError):
        value_iteration(_single_state(1.0, 1.0))


def test_average_reward_swap_chain():
    assert average_reward_oracle(swap_chain(), [0, 0]) == pytest.approx(0.5, abs=1e-12)


def test_average_reward_doubly_stochastic():
    # the ring under the uniform policy is doubly stochastic: stationary law is uniform
    spec = ring_mdp(6)
    pi = np.full((6, 2), 0.5)
    R = np.einsum("sakr,r->sa", spec.transition, spec.rewards)
    assert average_reward_oracle(spec, pi) == pytest.approx(float((pi * R).sum(axis=1).mean()), abs=1e-10)


def test_stationary_distribution_of_periodic_chain():
    d = stationary_distribution(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(d, 0.5, atol=1e-12)


def test_multiple_recurrent_classes_are_rejected():
    P = np.zeros((2, 1, 2, 1))
    P[0, 0, 0, 0] = P[1, 0, 1, 0] = 1.0
    with pytest.raises(ConfigError):
        average_reward_oracle(MdpSpec(P, np.zeros(1)), [0, 0])


def test_finite_differences():
    assert finite_diff_gradient(lambda w: w[0] ** 2, np.array([3.0]), 1e-5)[0] == pytest.approx(6.0, abs=1e-6)
    for h in (1e-2, 1e-4):
        g = finite_diff_gradient(lambda w: 2.0 * w[0] - 3.0 * w[1], np.array([1.0, 5.0]), h)
        assert np.allclose(g, [2.0, -3.0], atol=1e-9)


# -- seeding ------------------------------------------------------------------

def test_splitmix_reference_values():
    # first outputs of the SplitMix64 generator seeded with 0
    assert rngmod.splitmix64(0) == 0xE220A8397B1DCDAF
    assert rngmod.stream_seed(1, 0) != rngmod.stream_seed(1, 1)
    a = rngmod.make_rng(7, rngmod.ENV).random(3)
    b = rngmod.make_rng(7, rngmod.ENV).random(3)
    assert np.array_equal(a, b)


# -- stats --------------------------------------------------------------------

def test_rolling_examples():
    assert np.array_equal(rolling_stats([1, 2, 3, 4], 1), [1, 2, 3, 4])
    assert np.allclose(rolling_stats([1, 2, 3, 4], 2), [1, 1.5, 2.5, 3.5])
    assert np.allclose(rolling_stats(np.full(10, 3.0), 4), 3.0)
    with pytest.raises(ValueError):
        rolling_stats([1.0], 0)


def test_confidence_interval_examples():
    mean, half, degenerate = confidence_interval([[0.0], [2.0]])
    assert mean[0] == 1.0 and half[0] == pytest.approx(12.706, abs=1e-3) and not degenerate
    _, half, _ = confidence_interval([[1.0, 2.0]] * 3)
    assert not half.any()
    _, half, degenerate = confidence_interval([[1.0, 2.0]])
    assert degenerate and not half.any()


# -- emission -----------------------------------------------------------------

def _metrics():
    m = RunMetrics(3, label="demo")
    m.append(1)
    m.append(2, 0.1, 0.30000000000000004, r_bar=-0.25)
    m.append(3, 1e-300, -2.5, ep_return=-123.456789012345678)
    return m


def test_csv_header_and_empty_fields():
    text = to_csv([_metrics()])
    lines = text.split("\n")
    assert lines[0] == HEADER
    assert lines[1] == "1,,,,,,3"
    assert "\r" not in text and text.endswith("\n")


def test_csv_round_trip():
    m = _metrics()
    back = parse_csv(to_csv([m]))[0]
    assert back.seed == 3 and back.step == m.step
    for name in RunMetrics.COLUMNS[1:]:
        a, b = m.column(name), back.column(name)
        assert np.array_equal(np.isnan(a), np.isnan(b))
        assert np.array_equal(a[~np.isnan(a)], b[~np.isnan(b)])


def test_emit_writes_files(tmp_path):
    cfg = RunConfig(approximator="tabular", replay=False, total_steps=300, seeds=(1, 2),
                    agent_config=RunConfig().agent_config.__class__(alpha=0.1, batch_size=1))
    paths = emit(run_experiment(cfg), str(tmp_path), cfg.experiment, window=50)
    names = sorted(os.path.basename(p) for p in paths)
    assert names == ["td_divergence_q_tabular_pendulum.csv", "td_divergence_q_tabular_pendulum.summary.json",
                     "td_divergence_q_tabular_pendulum.svg"]
    summary = json.loads((tmp_path / names[1]).read_text())
    assert [s["seed"] for s in summary["seeds"]] == [1, 2]
    assert all(s["mean_abs_gap"] <= 1e-10 for s in summary["seeds"])
    assert (tmp_path / names[2]).read_text().startswith("<svg")


def test_tabular_gap_column_is_tiny():
    cfg = parse_config("[run]\napproximator = tabular\ntotal_steps = 500\n[agent]\nalpha = 0.1\n"
                       "batch_size = 1\nreplay = false\n")
    assert np.all(run_seed(cfg, 1).present("abs_gap") <= 1e-10)


def test_three_initial_estimates_give_three_outputs(tmp_path):
    cfg = parse_config("[run]\nexperiment = avg_reward_estimate\nagent = diff_q\napproximator = tabular\n"
                       "env = random_mdp\nseeds = 1\ntotal_steps = 200\n[agent]\nalpha = 0.1\ngamma = 1\n"
                       "batch_size = 1\nreplay = false\nr_bar0 = -0.25,0,0.25\n")
    results = run_experiment(cfg)
    assert len(results) == 3
    paths = emit(results, str(tmp_path), cfg.experiment)
    assert sum(p.endswith(".csv") for p in paths) == 3


def test_run_is_deterministic():
    cfg = parse_config("[run]\napproximator = mlp\ntotal_steps = 400\nseeds = 5\n[agent]\nbuffer_min = 50\n")
    assert to_csv([run_seed(cfg, 5)]) == to_csv([run_seed(cfg, 5)])


# -- config -------------------------------------------------------------------

CFG = """
[run]
experiment = td_divergence
agent = q
approximator = linear
seeds = 1,2
total_steps = 100
output_dir = out/here

[agent]
alpha = 1e-3
optimizer = sgd
loss = mean_square_value
batch_size = 1
replay = false

[features]
normalize = true
"""


def test_parse_config():
    cfg = parse_config(CFG)
    assert cfg.seeds == (1, 2) and cfg.agent_config.alpha == 1e-3 and not cfg.replay
    assert cfg.features.normalize and cfg.features.num_tilings == 32


@pytest.mark.parametrize("bad", [
    "[run]\nagent = sarsa\n",
    "[run]\nagent = diff_q\n[agent]\ngamma = 1\n",  # episodic pendulum
    "[run]\nagent = diff_q\nenv = random_mdp\n",  # gamma 0.99
    "[run]\nagent = a2c\nenv = random_mdp\n",
    "[run]\napproximator = tabular\n",  # replay on by default
    "[run]\nbogus = 1\n",
    "[agent]\nalpha = fast\n",
    "[extra]\nx = 1\n",
    "[run]\nexperiment = avg_reward_estimate\n",
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_output_dir_precedence(monkeypatch):
    cfg = parse_config(CFG)
    monkeypatch.delenv("TDLAB_OUTPUT_DIR", raising=False)
    assert resolve_output_dir(cfg) == "out/here"
    monkeypatch.setenv("TDLAB_OUTPUT_DIR", "/tmp/env")
    assert resolve_output_dir(cfg) == "/tmp/env"
    assert resolve_output_dir(cfg, "flag") == "flag"


def test_grid_and_overrides():
    grid = parse_grid("[grid]\nagent.alpha = 1e-3, 1e-2\nagent.eta = 1\n")
    assert grid == {"agent.alpha": ("1e-3", "1e-2"), "agent.eta": ("1",)}
    cfg = parse_config(apply_overrides(CFG, {"agent.alpha": "0.5"}))
    assert cfg.agent_config.alpha == 0.5
    with pytest.raises(ConfigError):
        parse_grid("[grid]\nalpha = 1\n")


# -- CLI ----------------------------------------------------------------------

def test_cli_run(tmp_path, capsys):
    path = tmp_path / "c.ini"
    path.write_text(CFG)
    assert main(["run", "--config", str(path), "--seeds", "3", "--out", str(tmp_path / "o")]) == 0
    csv_text = (tmp_path / "o" / "td_divergence_q_linear_pendulum.csv").read_text()
    assert csv_text.startswith(HEADER + "\n") and csv_text.rstrip("\n").split("\n")[-1].endswith(",3")


def test_cli_env_override(tmp_path, monkeypatch):
    path = tmp_path / "c.ini"
    path.write_text(CFG)
    monkeypatch.setenv("TDLAB_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--config", str(path)]) == 0
    assert (tmp_path / "env" / "td_divergence_q_linear_pendulum.csv").exists()


def test_cli_config_errors(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nagent = sarsa\n")
    assert main(["run", "--config", str(bad)]) == 2
    good = tmp_path / "c.ini"
    good.write_text(CFG)
    assert main(["run", "--config", str(good), "--seeds", "x"]) == 2


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CFG)
    grid = tmp_path / "g.ini"
    grid.write_text("[grid]\nagent.alpha = 1e-3, 1e-2\n")
    assert main(["sweep", "--config", str(cfg), "--grid", str(grid), "--out", str(tmp_path / "s")]) == 0
    assert sorted(os.listdir(tmp_path / "s")) == ["alpha=1e-2", "alpha=1e-3"]
    bad = tmp_path / "b.ini"
    bad.write_text("[grid]\nagent.optimizer = sgd, lbfgs\n")
    assert main(["sweep", "--config", str(cfg), "--grid", str(bad), "--out", str(tmp_path / "t")]) == 2
    assert not (tmp_path / "t").exists()  # validated before anything ran


def test_cli_check_exit_code(monkeypatch, capsys):
    from tdlab.harness import acceptance

    fake = [acceptance.CheckResult(1, "a", True, "ok"), acceptance.CheckResult(2, "b", False, "bad")]
    monkeypatch.setattr(acceptance, "run_all", lambda quick=False: fake)
    assert main(["check"]) == 3
    out = capsys.readouterr().out
    assert "[PASS]  1 a" in out and "[FAIL]  2 b" in out
    monkeypatch.setattr(acceptance, "run_all", lambda quick=False: fake[:1])
    assert main(["check"]) == 0


def test_console_entry_point_runs(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CFG)
    out = subprocess.run([sys.executable, "-m", "tdlab.harness.cli", "run", "--config", str(cfg), "--out",
                          str(tmp_path / "o")], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
