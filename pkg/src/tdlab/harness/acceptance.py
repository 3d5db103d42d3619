"""Acceptance checks shared by ``tdlab check`` and the test suite.

Each check returns a :class:`CheckResult`; none of them raises on failure.
"""

from __future__ import annotations

import bisect
import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from ..agents import AgentConfig, AvgRewardEstimator, DqnLearner, TabularQ, epsilon_greedy
from ..agents.tabular import tabular_differential_q_step, tabular_q_update
from ..envs import MdpEnv, PendulumEnv, PendulumParams, generate_random_mdp, observation_angle
from ..features import FeatureVector, TileCodingSpec, TileEncoder
from ..nn import MlpSpec, init_params, mlp_forward_batch, mlp_vjp
from ..oracle import average_reward_oracle, bellman_residual, finite_diff_gradient, value_iteration
from ..replay import Transition
from ..tderr import batch_equality_condition, predict_implicit_linear
from ..values import LinearValue
from .config import EnvConfig, RunConfig
from .emit import to_csv
from .runner import run_seed

PENDULUM_LOW = (-np.pi, -8.0)
PENDULUM_HIGH = (np.pi, 8.0)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, name, fn, *args, **kw) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn(*args, **kw)
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)


# -- 1: tabular ---------------------------------------------------------------

def tabular_gaps(num_mdps: int = 10, steps: int = 1000, alpha: float = 0.1) -> float:
    """Largest |explicit - implicit| over tabular Q and differential Q runs on random MDPs."""
    worst = 0.0
    for k in range(num_mdps):
        spec = generate_random_mdp(100 + k, 10, 3)
        for agent in ("q", "diff_q"):
            rng = np.random.default_rng(k)
            env = MdpEnv(spec, np.random.default_rng(1000 + k))
            q = TabularQ.zeros(spec.num_states, spec.num_actions)
            est = AvgRewardEstimator(0.0, 1.0, "implicit")
            s = env.reset()
            for _ in range(steps):
                a = epsilon_greedy(q.table[s], 0.1, rng)
                res = env.step(a)
                t = Transition(s, a, res.reward, res.next_observation)
                if agent == "q":
                    step = tabular_q_update(q, t, alpha, spec.gamma)
                else:
                    step, est = tabular_differential_q_step(q, est, t, alpha)
                worst = max(worst, abs(step.delta_e - step.delta_i))
                q = step.q
                s = res.next_observation
    return worst


def check_tabular():
    t0 = time.perf_counter()
    worst = tabular_gaps()
    dt = time.perf_counter() - t0
    return worst <= 1e-10 and dt < 5.0, f"max gap {worst:.3g} (<= 1e-10), {dt:.2f}s (< 5s)"


# -- 2: linear, single sample -------------------------------------------------

def _pendulum_transitions(n: int, seed: int):
    """(state, action, reward, next_state) tuples from a uniformly random pendulum policy."""
    rng = np.random.default_rng(seed)
    env = PendulumEnv(np.random.default_rng(seed + 1), PendulumParams(max_steps=None))
    obs = env.reset()
    out = []
    for _ in range(n):
        a = int(rng.integers(env.num_actions))
        res = env.step(a)
        out.append((observation_angle(obs), a, res.reward, observation_angle(res.next_observation)))
        obs = res.next_observation
    return out


def linear_single_gaps(normalize: bool, steps: int = 3000, alpha: float = 2e-4, seed: int = 0) -> float:
    """Max |delta_i - ||x||^2 delta_e| for online linear SGD on the mean-square loss."""
    spec = TileCodingSpec(32, 8, PENDULUM_LOW, PENDULUM_HIGH, 3, normalize)
    enc = TileEncoder(spec)
    value = LinearValue(enc, spec.dim, 3)
    cfg = AgentConfig(alpha=alpha, optimizer="sgd", loss="mean_square_value", batch_size=1, tau_polyak=1.0)
    learner = DqnLearner(value, cfg)
    scale = 1.0 if normalize else float(spec.num_tilings)
    worst = 0.0
    for s, a, r, s2 in _pendulum_transitions(steps, seed):
        rep = learner.update([Transition(s, a, r, s2)]).report
        worst = max(worst, abs(rep.implicit_mean - scale * rep.explicit_mean))
    return worst


def check_linear_single():
    t0 = time.perf_counter()
    norm = linear_single_gaps(True)
    raw = linear_single_gaps(False)
    dt = time.perf_counter() - t0
    ok = norm <= 1e-10 and raw <= 1e-8 and dt < 10.0
    return ok, f"normalized {norm:.3g} (<= 1e-10), 32 tilings {raw:.3g} (<= 1e-8), {dt:.2f}s"


# -- 3: linear, batches -------------------------------------------------------

def linear_batch_errors(sizes=(2, 4, 8, 32), batches: int = 100, alpha: float = 2e-4, seed: int = 0) -> float:
    """Max |measured batch-mean implicit error - closed-form prediction| over random batches."""
    rng = np.random.default_rng(seed)
    spec = TileCodingSpec(32, 8, PENDULUM_LOW, PENDULUM_HIGH, 3, False)
    enc = TileEncoder(spec, cache_size=0)
    cfg_base = AgentConfig(alpha=alpha, optimizer="sgd", loss="mean_square_value", tau_polyak=1.0)
    worst = 0.0
    for B in sizes:
        cfg = dataclasses.replace(cfg_base, batch_size=B)
        for _ in range(batches):
            value = LinearValue(enc, spec.dim, 3)
            value.params = value.params.with_values(rng.normal(0.0, 0.1, spec.dim))
            # few distinct states so that batches share tiles and the Gram matrix is non-trivial
            pool = rng.uniform(PENDULUM_LOW, PENDULUM_HIGH, size=(max(2, B // 2), 2))
            batch = []
            for _ in range(B):
                s = pool[rng.integers(len(pool))]
                s2 = rng.uniform(PENDULUM_LOW, PENDULUM_HIGH)
                batch.append(Transition(s, int(rng.integers(3)), float(rng.uniform(-16, 0)), s2))
            rep = DqnLearner(value, cfg).update(batch).report
            feats = [enc(t.state, t.action) for t in batch]
            worst = max(worst, abs(rep.implicit_mean - predict_implicit_linear(feats, rep.explicit_per_sample)))
    return worst


def classify_examples() -> bool:
    dim = 8
    ortho = [FeatureVector([k], [1.0], dim) for k in range(4)]
    dup = [FeatureVector([3], [1.0], dim) for _ in range(4)]
    return (not batch_equality_condition(ortho)[0]) and batch_equality_condition(dup)[0]


def check_linear_batch():
    t0 = time.perf_counter()
    worst = linear_batch_errors()
    cls_ok = classify_examples()
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and cls_ok and dt < 10.0
    return ok, f"max error {worst:.3g} (<= 1e-8), classifier {'ok' if cls_ok else 'WRONG'}, {dt:.2f}s"


# -- 4: gradient checks -------------------------------------------------------

def gradient_check_errors(count: int = 50, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        depth = int(rng.integers(1, 4))
        spec = MlpSpec(int(rng.integers(1, 6)), tuple(int(h) for h in rng.integers(2, 9, size=depth)),
                       int(rng.integers(1, 4)))
        # non-zero biases keep every pre-activation away from the ReLU kink at 0
        params = init_params(spec, rng)
        params = params.with_values(params.values + rng.normal(0.0, 0.3, len(params)))
        X = rng.normal(size=(int(rng.integers(1, 5)), spec.input_dim))
        G = rng.normal(size=(len(X), spec.output_dim))
        analytic = mlp_vjp(spec, params, X, G).values
        numeric = finite_diff_gradient(
            lambda v: float(np.sum(G * mlp_forward_batch(spec, params.with_values(v), X))), params, 1e-6)
        scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
        worst = max(worst, float(np.max(np.abs(analytic - numeric)) / scale))
    return worst


def check_gradients():
    t0 = time.perf_counter()
    worst = gradient_check_errors()
    dt = time.perf_counter() - t0
    return worst < 1e-4 and dt < 30.0, f"max relative error {worst:.3g} (< 1e-4), {dt:.2f}s"


# -- 5: epsilon ledger --------------------------------------------------------

def ledger_config(rule: str = "explicit", updates: int = 10_000) -> RunConfig:
    ac = AgentConfig(alpha=1e-3, gamma=1.0, batch_size=32, optimizer="adam", loss="smooth_l1", buffer_min=100)
    return RunConfig(experiment="avg_reward_estimate", agent="diff_q", approximator="mlp", env="random_mdp",
                     seeds=(1,), total_steps=updates + ac.buffer_min - 1, agent_config=ac, rule=rule,
                     r_bar0=(0.0,), replay=True, hidden=(32, 32), env_config=EnvConfig(mdp_seed=1))


def ledger_error(updates: int = 10_000):
    m = run_seed(ledger_config("explicit", updates), 1, 0.0)
    n = int(np.sum(~np.isnan(m.column("abs_gap"))))
    rebuilt = m.r_bar0 + m.implicit_sum[-1] + m.epsilon_sum[-1]
    return abs(rebuilt - m.r_bar[-1]), n, m


def check_ledger():
    err, n, _ = ledger_error()
    return err <= 1e-6 and n >= 10_000, f"|reconstructed - tracked R-bar| {err:.3g} (<= 1e-6) over {n} updates"


# -- 6: gap ordering on the pendulum ------------------------------------------

FIG2_STEPS = {"tabular": 50_000, "linear": 50_000, "mlp": 20_000}
FIG2_ALPHA = {"tabular": 0.1, "linear": 1e-3, "mlp": 2e-4}


def divergence_config(approximator: str, steps: int | None = None, seeds=(1, 2, 3, 4)) -> RunConfig:
    replay = approximator == "mlp"
    ac = AgentConfig(alpha=FIG2_ALPHA[approximator], optimizer="sgd", loss="mean_square_value",
                     batch_size=32 if replay else 1, gamma=0.99, epsilon=0.1)
    return RunConfig(experiment="td_divergence", agent="q", approximator=approximator, env="pendulum",
                     seeds=tuple(seeds), total_steps=steps or FIG2_STEPS[approximator], agent_config=ac,
                     replay=replay, hidden=(32, 32))


def divergence_summary(quick: bool = False):
    """Per approximator: (mean gap, first-10% mean, last-10% mean), averaged over seeds."""
    out = {}
    for appr in ("tabular", "linear", "mlp"):
        steps = FIG2_STEPS[appr] // (5 if quick else 1)
        cfg = divergence_config(appr, steps)
        means, first, last = [], [], []
        for seed in cfg.seeds:
            g = run_seed(cfg, seed).present("abs_gap")
            k = max(1, g.size // 10)
            means.append(g.mean())
            first.append(g[:k].mean())
            last.append(g[-k:].mean())
        out[appr] = (float(np.mean(means)), float(np.mean(first)), float(np.mean(last)))
    return out


def check_divergence(quick: bool = False):
    t0 = time.perf_counter()
    s = divergence_summary(quick)
    dt = time.perf_counter() - t0
    tab, lin, mlp = s["tabular"][0], s["linear"][0], s["mlp"][0]
    ordered = tab <= 1e-10 < lin < mlp
    taper = s["linear"][2] < s["linear"][1]
    ok = ordered and taper and dt < 600.0
    return ok, (f"mean gap tabular {tab:.3g} < linear {lin:.4g} < mlp {mlp:.4g}; linear first/last 10% "
                f"{s['linear'][1]:.4g} -> {s['linear'][2]:.4g}; {dt:.0f}s (< 600s)")


# -- 7: average-reward estimates ----------------------------------------------

def rbar_bounds_config(rule: str = "implicit", steps: int = 10_000) -> RunConfig:
    ac = AgentConfig(alpha=1e-3, gamma=1.0, batch_size=32, optimizer="adam", loss="smooth_l1")
    return RunConfig(experiment="avg_reward_estimate", agent="diff_q", approximator="mlp", env="random_mdp",
                     seeds=(1,), total_steps=steps, agent_config=ac, rule=rule, r_bar0=(-0.25, 0.0, 0.25),
                     replay=True, env_config=EnvConfig(num_states=10, mdp_seed=1))


def rbar_bounds(rule: str = "implicit", steps: int = 10_000):
    """(all trajectories inside the reward range, per-R-bar0 (min, max, final)) for MLP differential DQN."""
    cfg = rbar_bounds_config(rule, steps)
    spec = generate_random_mdp(cfg.env_config.mdp_seed, 10, 3)
    lo, hi = spec.reward_range
    inside, traces = True, {}
    for r0 in cfg.r_bar0:
        r = run_seed(cfg, 1, r0).column("r_bar")
        traces[r0] = (float(r.min()), float(r.max()), float(r[-1]))
        inside &= bool(np.all((r >= lo) & (r <= hi)))
    return inside, traces, (lo, hi)


def tabular_rbar_error(steps: int = 200_000, alpha: float = 0.05, eta: float = 0.2, seed: int = 3):
    """|final R-bar - oracle rate of the learned greedy policy| for tabular differential Q-learning."""
    spec = generate_random_mdp(1, 10, 3)
    env = MdpEnv(spec, np.random.default_rng(seed))
    rng = np.random.default_rng(seed + 1)
    q = TabularQ.zeros(10, 3)
    est = AvgRewardEstimator(0.0, eta, "implicit")
    s = env.reset()
    for _ in range(steps):
        a = epsilon_greedy(q.table[s], 0.1, rng)
        res = env.step(a)
        step, est = tabular_differential_q_step(q, est, Transition(s, a, res.reward, res.next_observation), alpha)
        q = step.q
        s = res.next_observation
    target = average_reward_oracle(spec, q.greedy_policy())
    return abs(est.r_bar - target), est.r_bar, target


def check_rbar():
    inside, traces, (lo, hi) = rbar_bounds()
    explicit = rbar_bounds("explicit")[1]
    err, got, want = tabular_rbar_error()
    ok = inside and err <= 0.05
    rng_txt = ", ".join(f"{r0:+.2f}: [{a:.3f}, {b:.3f}]" for r0, (a, b, _) in traces.items())
    exp_txt = ", ".join(f"{r0:+.2f}: {f:.3f}" for r0, (_, _, f) in explicit.items())
    return ok, (f"implicit R-bar ranges {rng_txt} within [{lo:.3f}, {hi:.3f}]; explicit finals {exp_txt} "
                f"(reported); tabular R-bar {got:.4f} vs oracle {want:.4f} (|diff| {err:.3g} <= 0.05)")


# -- 8: actor-critic signs ----------------------------------------------------

def a2c_config(approximator: str = "linear", steps: int = 5000) -> RunConfig:
    if approximator == "linear":
        # plain SGD on the squared error: the implicit error is exactly ||x||^2 times the explicit one
        ac = AgentConfig(alpha=2e-4, eta=1e-2, gamma=0.99, optimizer="sgd", loss="mean_square_value", batch_size=1)
    else:
        ac = AgentConfig(alpha=2e-4, eta=1e-2, gamma=0.99, optimizer="adam", loss="smooth_l1", batch_size=1)
    return RunConfig(experiment="performance", agent="a2c", approximator=approximator, env="pendulum",
                     seeds=(1,), total_steps=steps, agent_config=ac, rule="implicit", replay=False)


def check_a2c_signs():
    lin = run_seed(a2c_config("linear"), 1)
    mlp = run_seed(a2c_config("mlp", 2000), 1)
    ok = lin.sign_total > 0 and lin.sign_agree == lin.sign_total
    return ok, (f"linear critic {lin.sign_agree}/{lin.sign_total} steps agree (all required); "
                f"mlp critic rate {mlp.sign_agreement_rate:.3f} (reported)")


# -- 9: determinism -----------------------------------------------------------

def determinism_configs():
    return [divergence_config("linear", 2000, seeds=(1, 2)), divergence_config("mlp", 1000, seeds=(1,)),
            a2c_config("mlp", 500), rbar_bounds_config("implicit", 1000)]


def check_determinism():
    mismatched = []
    for cfg in determinism_configs():
        r0s = cfg.r_bar0 if cfg.experiment == "avg_reward_estimate" else (None,)
        a = to_csv([run_seed(cfg, s, r) for r in r0s for s in cfg.seeds])
        b = to_csv([run_seed(cfg, s, r) for r in r0s for s in cfg.seeds])
        if a.encode() != b.encode():
            mismatched.append(f"{cfg.agent}/{cfg.approximator}")
    n = len(determinism_configs())
    return not mismatched, f"{n - len(mismatched)}/{n} experiments byte-identical across two runs"


# -- 10: oracles --------------------------------------------------------------

def simulate_rate(spec, policy, steps: int, seed: int, batches: int = 100):
    """Monte Carlo reward rate of a deterministic policy: (mean, standard error from batch means)."""
    rng = np.random.default_rng(seed)
    cdfs = [list(np.cumsum(spec.transition[s, policy[s]].ravel())) for s in range(spec.num_states)]
    nr = spec.rewards.size
    rewards = spec.rewards.tolist()
    u = rng.random(steps)
    s = 0
    total = np.empty(steps)
    for t in range(steps):
        cdf = cdfs[s]
        k = min(bisect.bisect_right(cdf, u[t]), len(cdf) - 1)
        s, ri = divmod(k, nr)
        total[t] = rewards[ri]
    means = total[: steps - steps % batches].reshape(batches, -1).mean(axis=1)
    return float(means.mean()), float(means.std(ddof=1) / np.sqrt(batches))


def oracle_consistency(num_mdps: int = 5, steps: int = 1_000_000):
    worst_res, worst_z = 0.0, 0.0
    for k in range(num_mdps):
        spec = generate_random_mdp(200 + k, 10, 3)
        q = value_iteration(spec)
        worst_res = max(worst_res, bellman_residual(spec, q))
        policy = q.argmax(axis=1)
        mean, se = simulate_rate(spec, policy, steps, seed=k)
        worst_z = max(worst_z, abs(mean - average_reward_oracle(spec, policy)) / se)
    return worst_res, worst_z


def check_oracles(quick: bool = False):
    res, z = oracle_consistency(steps=100_000 if quick else 1_000_000)
    return res < 1e-9 and z <= 3.0, f"max Bellman residual {res:.3g} (< 1e-9), max |MC - oracle| {z:.2f} sigma (<= 3)"


CHECKS = [
    (1, "tabular implicit == explicit", check_tabular),
    (2, "linear B=1 scaling", check_linear_single),
    (3, "linear batch prediction", check_linear_batch),
    (4, "MLP gradient check", check_gradients),
    (5, "epsilon ledger", check_ledger),
    (6, "gap ordering and taper", check_divergence),
    (7, "average-reward estimates", check_rbar),
    (8, "A2C sign agreement", check_a2c_signs),
    (9, "determinism", check_determinism),
    (10, "oracle self-consistency", check_oracles),
]

QUICKABLE = {6, 10}


def run_check(number: int, quick: bool = False) -> CheckResult:
    num, name, fn = CHECKS[number - 1]
    kw = {"quick": quick} if num in QUICKABLE else {}
    return _timed(num, name, fn, **kw)


def run_all(quick: bool = False) -> list[CheckResult]:
    return [run_check(n, quick) for n, _, _ in CHECKS]
