import dataclasses

import numpy as np
import pytest

from tdlab.agents import (
    A2cReport,
    ActorTransition,
    AgentConfig,
    AvgRewardEstimator,
    DqnLearner,
    GaussianActor,
    PolicySpec,
    TabularQ,
    a2c_update,
    actor_loss,
    dqn_update,
    epsilon_greedy,
    r_bar_increment,
    select_action,
    tabular_differential_q_step,
    tabular_differential_q_update,
    tabular_q_update,
)
from tdlab.envs import MdpEnv, generate_random_mdp, swap_chain
from tdlab.errors import ConfigError, ContractError
from tdlab.features import FeatureVector, TileCodingSpec, TileEncoder
from tdlab.nn import MlpSpec, ParamVector, init_params
from tdlab.oracle import finite_diff_gradient, value_iteration
from tdlab.replay import Transition
from tdlab.tderr import (
    EpsilonLedger,
    TdMode,
    batch_equality_condition,
    epsilon_ledger_update,
    explicit_td,
    gram_means,
    implicit_td,
    make_report,
    predict_implicit_linear,
)
from tdlab.values import LinearValue, MlpValue, TabularValue


def _table(n_states, n_actions, entries):
    v = TabularValue(n_states, n_actions)
    t = np.zeros((n_states, n_actions))
    for (s, a), q in entries.items():
        t[s, a] = q
    v.params = ParamVector(t.ravel())
    return v


# -- explicit / implicit errors -----------------------------------------------

def test_explicit_discounted():
    v = _table(2, 2, {(0, 0): 0.5, (1, 1): 2.0})
    d = explicit_td([Transition(0, 0, 1.0, 1)], v, v, TdMode.discounted(0.99))
    assert d[0] == pytest.approx(2.48, abs=1e-12)


def test_explicit_differential():
    v = _table(2, 1, {})
    d = explicit_td([Transition(0, 0, 1.0, 1)], v, v, TdMode.differential(0.25))
    assert d[0] == 0.75


def test_explicit_terminal_and_centered():
    v = _table(2, 1, {(1, 0): 10.0})
    assert explicit_td([Transition(0, 0, 1.0, 1, True)], v, v, TdMode.discounted(0.9))[0] == 1.0
    assert explicit_td([Transition(0, 0, 1.0, 1)], v, v, TdMode.centered(0.5, 0.5))[0] == 5.5


def test_differential_rejects_terminal():
    v = _table(2, 1, {})
    with pytest.raises(ContractError):
        explicit_td([Transition(0, 0, 1.0, 1, True)], v, v, TdMode.differential(0.0))


def test_explicit_is_zero_at_the_bellman_fixed_point():
    spec = generate_random_mdp(11, 5, 2, gamma=0.9)
    q = value_iteration(spec, 1e-13)
    v = TabularValue(5, 2, ParamVector(q.ravel()))
    # expected explicit error per (s, a) under the model, averaged over (s', r)
    for s in range(5):
        for a in range(2):
            exp = 0.0
            for s2 in range(5):
                for ri, r in enumerate(spec.rewards):
                    p = spec.transition[s, a, s2, ri]
                    if p:
                        exp += p * explicit_td([Transition(s, a, r, s2)], v, v, TdMode.discounted(0.9))[0]
            assert abs(exp) < 1e-9


def test_implicit_examples():
    v = _table(2, 1, {(0, 0): 0.5})
    before = v.snapshot()
    after = ParamVector(np.array([0.748, 0.0]))
    assert implicit_td([Transition(0, 0, 0.0, 1)], before, before, v, 0.1)[0] == 0.0
    assert implicit_td([Transition(0, 0, 0.0, 1)], before, after, v, 0.1)[0] == pytest.approx(2.48, abs=1e-12)
    with pytest.raises(ConfigError):
        implicit_td([Transition(0, 0, 0.0, 1)], before, after, v, 0.0)


# -- linear predictions -------------------------------------------------------

def test_prediction_single_unit_feature():
    assert predict_implicit_linear([FeatureVector([1], [1.0], 3)], [2.5]) == 2.5


def test_prediction_orthonormal_pair():
    feats = [FeatureVector([0], [1.0], 2), FeatureVector([1], [1.0], 2)]
    assert predict_implicit_linear(feats, [1.0, 1.0]) == 0.5


def test_orthonormal_pair_matches_an_actual_sgd_step():
    enc = lambda s, a: FeatureVector([s], [1.0], 2)  # noqa: E731
    v = LinearValue(enc, 2, 1)
    cfg = AgentConfig(alpha=0.1, optimizer="sgd", loss="mean_square_value", batch_size=2, tau_polyak=1.0, gamma=0.0)
    batch = [Transition(0, 0, 1.0, 0), Transition(1, 0, 1.0, 1)]
    rep = dqn_update(v, v.snapshot(), batch, cfg).report
    assert rep.explicit_mean == 1.0 and rep.implicit_mean == pytest.approx(0.5, abs=1e-15)


def test_prediction_identical_features():
    x = FeatureVector([2], [1.0], 4)
    assert predict_implicit_linear([x, x], [3.0, -1.0]) == 1.0


def test_equality_condition_examples():
    unit = FeatureVector([0], [1.0], 3)
    ok, means = batch_equality_condition([unit])
    assert ok and means.tolist() == [1.0]
    ok, means = batch_equality_condition([FeatureVector([0], [1.0], 3), FeatureVector([1], [1.0], 3)])
    assert not ok and means.tolist() == [0.5, 0.5]
    ok, means = batch_equality_condition([unit] * 3)
    assert ok and means.tolist() == [1.0, 1.0, 1.0]


def test_gram_means_shared_tiles():
    a = FeatureVector([0, 1], [1.0, 1.0], 4)
    b = FeatureVector([1, 2], [1.0, 1.0], 4)
    assert gram_means([a, b]).tolist() == [1.5, 1.5]


def test_dqn_linear_report_matches_prediction():
    spec = TileCodingSpec(8, 4, (-np.pi, -8.0), (np.pi, 8.0), 2)
    enc = TileEncoder(spec)
    v = LinearValue(enc, spec.dim, 2)
    rng = np.random.default_rng(0)
    v.params = v.params.with_values(rng.normal(size=spec.dim))
    cfg = AgentConfig(alpha=0.01, optimizer="sgd", loss="mean_square_value", batch_size=4, tau_polyak=1.0)
    batch = [Transition(rng.uniform((-3, -8), (3, 8)), int(rng.integers(2)), -1.0, rng.uniform((-3, -8), (3, 8)))
             for _ in range(4)]
    rep = dqn_update(v, v.snapshot(), batch, cfg).report
    feats = [enc(t.state, t.action) for t in batch]
    assert rep.implicit_mean == pytest.approx(predict_implicit_linear(feats, rep.explicit_per_sample), abs=1e-8)


# -- ledger -------------------------------------------------------------------

def test_ledger_with_zero_gap_tracks_the_implicit_trajectory():
    led = EpsilonLedger(0.25)
    r_bar = 0.25
    for di in (0.3, -1.0, 2.0):
        epsilon_ledger_update(led, 0.1, 0.5, 0.0, di)
        r_bar += 0.5 * 0.1 * di
    assert led.reconstruct() == pytest.approx(r_bar, abs=1e-15) and led.epsilon_sum == 0.0


def test_report_gap():
    rep = make_report([1.0, 3.0], [1.0, 1.0], 0.1)
    assert rep.epsilon == 1.0 and rep.abs_gap == 1.0


# -- tabular agents -----------------------------------------------------------

def test_tabular_q_update_example():
    q = TabularQ(np.array([[0.5], [2.0]]))
    step = tabular_q_update(q, Transition(0, 0, 1.0, 1), 0.1, 0.99)
    assert step.q.table[0, 0] == pytest.approx(0.748, abs=1e-15)
    assert step.delta_e == pytest.approx(2.48, abs=1e-12) and step.delta_i == pytest.approx(2.48, abs=1e-12)
    assert q.table[0, 0] == 0.5  # input not mutated


def test_alpha_zero_convention():
    q = TabularQ(np.array([[0.5], [2.0]]))
    step = tabular_q_update(q, Transition(0, 0, 1.0, 1), 0.0, 0.99)
    assert np.array_equal(step.q.table, q.table)
    assert step.degenerate and step.delta_i == step.delta_e


def test_differential_q_example():
    q = TabularQ.zeros(2, 1)
    est = AvgRewardEstimator(0.25, 0.5)
    q2, est2, delta = tabular_differential_q_update(q, est, Transition(0, 0, 1.0, 1), 0.1)
    assert delta == 0.75 and q2.table[0, 0] == pytest.approx(0.075) and est2.r_bar == pytest.approx(0.2875)
    with pytest.raises(ContractError):
        tabular_differential_q_update(q, est, Transition(0, 0, 1.0, 1, True), 0.1)


def test_differential_q_on_swap_chain():
    env = MdpEnv(swap_chain(), np.random.default_rng(0))
    rng = np.random.default_rng(1)
    q, est = TabularQ.zeros(2, 2), AvgRewardEstimator(0.0, 1.0)
    s = env.reset()
    for _ in range(5000):
        a = epsilon_greedy(q.table[s], 0.1, rng)
        res = env.step(a)
        q, est, _ = tabular_differential_q_update(q, est, Transition(s, a, res.reward, res.next_observation), 0.05)
        s = res.next_observation
    assert est.r_bar == pytest.approx(0.5, abs=0.02)


def test_tabular_q_learning_reaches_the_optimum():
    spec = generate_random_mdp(21, 5, 2, gamma=0.9)
    q_star = value_iteration(spec)
    q = TabularQ.zeros(5, 2)
    rng = np.random.default_rng(0)
    counts = np.zeros((5, 2))
    env = MdpEnv(spec, np.random.default_rng(1))
    s = env.reset()
    for _ in range(10_000):
        a = epsilon_greedy(q.table[s], 0.5, rng)
        res = env.step(a)
        counts[s, a] += 1
        q = tabular_q_update(q, Transition(s, a, res.reward, res.next_observation), 1.0 / counts[s, a] ** 0.6,
                             0.9).q
        s = res.next_observation
    assert np.max(np.abs(q.table - q_star)) < 0.05 * max(1.0, np.max(np.abs(q_star)))


@pytest.mark.parametrize("rule", ["implicit", "explicit", "none"])
def test_tabular_differential_rules(rule):
    q = TabularQ.zeros(2, 1)
    step, est = tabular_differential_q_step(q, AvgRewardEstimator(0.25, 0.5, rule), Transition(0, 0, 1.0, 1), 0.1)
    expected = 0.25 if rule == "none" else 0.2875
    assert est.r_bar == pytest.approx(expected, abs=1e-15)


# -- DQN family ---------------------------------------------------------------

def test_smallest_magnitude_rule():
    rep = make_report([-3.0, 0.5, 2.0], [0.0, 0.0, 0.0], 0.1)
    assert r_bar_increment("smallest_magnitude", 1.0, 0.1, rep) == pytest.approx(0.05)
    tie = make_report([-0.5, 0.5], [0.0, 0.0], 0.1)
    assert r_bar_increment("smallest_magnitude", 1.0, 1.0, tie) == -0.5


def test_zero_td_batch_is_a_fixed_point():
    v = _table(2, 1, {(0, 0): 1.0, (1, 0): 1.0})
    cfg = AgentConfig(alpha=0.1, gamma=1.0, batch_size=2)
    est = AvgRewardEstimator(0.5, 1.0, "explicit")
    batch = [Transition(0, 0, 0.5, 1), Transition(1, 0, 0.5, 0)]
    step = dqn_update(v, v.snapshot(), batch, cfg, "differential", est, None)
    assert np.array_equal(step.params.values, v.params.values)
    assert not step.report.implicit_per_sample.any() and step.estimator.r_bar == 0.5


def test_differential_requires_unit_gamma():
    v = _table(2, 1, {})
    with pytest.raises(ConfigError):
        DqnLearner(v, AgentConfig(gamma=0.99), "differential", AvgRewardEstimator())


def test_dqn_learner_ledger_identity():
    spec = MlpSpec(4, (8,), 2)
    v = MlpValue(spec, init_params(spec, np.random.default_rng(0)), lambda s: np.eye(4)[s])
    learner = DqnLearner(v, AgentConfig(alpha=1e-2, gamma=1.0, batch_size=4), "differential",
                         AvgRewardEstimator(0.1, 1.0, "explicit"))
    led = EpsilonLedger(0.1)
    rng = np.random.default_rng(1)
    for _ in range(200):
        batch = [Transition(int(rng.integers(4)), int(rng.integers(2)), float(rng.normal()), int(rng.integers(4)))
                 for _ in range(4)]
        rep = learner.update(batch).report
        led.update(1e-2, 1.0, rep.epsilon, rep.implicit_mean)
    assert led.reconstruct() == pytest.approx(learner.r_bar, abs=1e-12)


def test_centered_mode_runs_and_updates_estimate():
    v = _table(2, 1, {})
    step = dqn_update(v, v.snapshot(), [Transition(0, 0, 1.0, 1)], AgentConfig(alpha=0.1, batch_size=1,
                      optimizer="sgd", loss="mean_square_value"), "centered", AvgRewardEstimator(0.0, 1.0))
    assert step.estimator.r_bar == pytest.approx(0.1)


# -- policies -----------------------------------------------------------------

def test_epsilon_zero_is_greedy_with_low_ties():
    rng = np.random.default_rng(0)
    assert all(epsilon_greedy(np.array([1.0, 3.0, 3.0]), 0.0, rng) == 1 for _ in range(100))


def test_epsilon_one_is_uniform():
    rng = np.random.default_rng(0)
    n = 100_000
    counts = np.bincount([epsilon_greedy(np.array([0.0, 5.0, 1.0]), 1.0, rng) for _ in range(n)], minlength=3)
    p = 1 / 3
    assert np.all(np.abs(counts - n * p) <= 3 * np.sqrt(n * p * (1 - p)))


def test_select_action_dispatch():
    v = _table(1, 3, {(0, 2): 1.0})
    assert select_action(PolicySpec(epsilon=0.0), v, 0, np.random.default_rng(0)) == 2


def _actor(seed=0):
    spec = MlpSpec(3, (8,), 2)
    return GaussianActor(spec, 2.0), init_params(spec, np.random.default_rng(seed))


def test_log_std_is_clamped():
    actor, p = _actor()
    blocks = [b.copy() for b in p.blocks()]
    blocks[-2][:] = 0.0
    blocks[-1][:] = np.array([[0.0], [5.0]])  # raw log-std output 5
    p = p.with_values(np.concatenate([b.ravel() for b in blocks]))
    _, log_std, raw = actor.head(p, np.zeros(3))
    assert raw[0] == 5.0 and log_std[0] == 2.0
    g = actor.grad_log_prob(p, np.zeros(3), np.array([0.3]))
    assert g.values[-1] == 0.0  # no gradient through the clamp


def test_log_prob_gradient_matches_finite_differences():
    actor, p = _actor(3)
    obs, x = np.array([0.2, -0.4, 1.0]), np.array([0.7])
    numeric = finite_diff_gradient(lambda v: actor.log_prob_pre(p.with_values(v), obs, x), p, 1e-6)
    assert np.max(np.abs(actor.grad_log_prob(p, obs, x).values - numeric)) < 1e-6


def test_log_prob_includes_the_squashing_correction():
    actor, p = _actor(1)
    obs = np.array([0.1, 0.2, 0.3])
    mean, log_std, _ = actor.head(p, obs)
    x = np.array([0.4])
    sd = np.exp(log_std[0])
    gauss = -0.5 * ((x[0] - mean[0]) / sd) ** 2 - np.log(sd) - 0.5 * np.log(2 * np.pi)
    expected = gauss - np.log(2.0 * (1 - np.tanh(x[0]) ** 2))
    assert actor.log_prob_pre(p, obs, x) == pytest.approx(expected, abs=1e-12)


# -- A2C ----------------------------------------------------------------------

def _linear_critic():
    spec = TileCodingSpec(32, 8, (-np.pi, -8.0), (np.pi, 8.0), 1)
    enc = TileEncoder(spec)
    return LinearValue(lambda s, a: enc(s[:2], a), spec.dim, 1)


def test_actor_loss_formula():
    assert actor_loss(-1.0, 2.0) == 2.0


def test_zero_td_moves_nothing():
    critic = _linear_critic()
    actor, u = _actor()
    cfg = AgentConfig(alpha=0.1, gamma=0.0, optimizer="sgd", loss="mean_square_value", batch_size=1)
    t = ActorTransition(np.array([0.1, 0.2, 0.0]), np.array([0.5]), np.array([0.3]), 0.0, np.zeros(3))
    step = a2c_update(critic, actor, u, t, cfg, "implicit")
    assert np.array_equal(step.critic_params.values, critic.params.values)
    assert np.array_equal(step.actor_params.values, u.values)


@pytest.mark.parametrize("rule", ["implicit", "explicit"])
def test_linear_critic_scales_the_advantage(rule):
    critic = _linear_critic()
    actor, u = _actor()
    cfg = AgentConfig(alpha=0.01, eta=0.5, gamma=0.9, optimizer="sgd", loss="mean_square_value", batch_size=1)
    t = ActorTransition(np.array([0.1, 0.2, 0.0]), np.array([0.5]), np.array([0.3]), -1.0, np.array([0.3, 0.1, 0]))
    step = a2c_update(critic, actor, u, t, cfg, rule)
    rep: A2cReport = step.report
    assert rep.delta_i == pytest.approx(32 * rep.delta_e, abs=1e-10)
    assert rep.signs_agree
    g = actor.grad_log_prob(u, t.state, t.pre_tanh).values
    expected = u.values + cfg.eta * cfg.alpha * rep.delta_used * g
    assert np.allclose(step.actor_params.values, expected, atol=1e-14)


def test_a2c_rejects_unknown_rule():
    critic = _linear_critic()
    actor, u = _actor()
    t = ActorTransition(np.zeros(3), np.zeros(1), np.zeros(1), 0.0, np.zeros(3))
    with pytest.raises(ConfigError):
        a2c_update(critic, actor, u, t, AgentConfig(), "smallest_magnitude")


def test_agent_config_validation():
    with pytest.raises(ConfigError):
        AgentConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        AgentConfig(optimizer="rmsprop")
    with pytest.raises(ConfigError):
        dataclasses.replace(AgentConfig(), tau_polyak=2.0)
