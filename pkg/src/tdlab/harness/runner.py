"""Experiment driver: builds env + agent per seed, steps them, records per-step metrics."""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..agents import (
    ActorTransition,
    AvgRewardEstimator,
    DqnLearner,
    GaussianActor,
    TabularQ,
    a2c_update,
    epsilon_greedy,
    tabular_differential_q_step,
    tabular_q_update,
)
from ..envs import MdpEnv, PendulumEnv, PendulumParams, generate_random_mdp, observation_angle, ring_mdp, swap_chain
from ..features import GridSpec, TileCodingSpec, TileEncoder, one_hot_encode
from ..nn import MlpSpec, init_params
from ..replay import ReplayBuffer, Transition
from ..tderr import EpsilonLedger
from ..values import LinearValue, MlpValue, SigmoidLinearValue, TabularValue, one_hot_input
from . import rng as rngmod
from .config import RunConfig

log = logging.getLogger(__name__)

PENDULUM_LOW = (-np.pi, -8.0)
PENDULUM_HIGH = (np.pi, 8.0)


@dataclass
class RunMetrics:
    seed: int
    label: str = ""
    step: list = field(default_factory=list)
    delta_e_mean: list = field(default_factory=list)
    delta_i_mean: list = field(default_factory=list)
    abs_gap: list = field(default_factory=list)
    r_bar: list = field(default_factory=list)
    episode_return: list = field(default_factory=list)
    implicit_sum: list = field(default_factory=list)
    epsilon_sum: list = field(default_factory=list)
    r_bar0: float | None = None
    sign_agree: int = 0
    sign_total: int = 0

    COLUMNS = ("step", "delta_e_mean", "delta_i_mean", "abs_gap", "r_bar", "episode_return")

    def append(self, step, de=None, di=None, r_bar=None, ep_return=None, ledger=None):
        nan = float("nan")
        self.step.append(step)
        self.delta_e_mean.append(nan if de is None else float(de))
        self.delta_i_mean.append(nan if di is None else float(di))
        self.abs_gap.append(nan if de is None else abs(float(de) - float(di)))
        self.r_bar.append(nan if r_bar is None else float(r_bar))
        self.episode_return.append(nan if ep_return is None else float(ep_return))
        self.implicit_sum.append(nan if ledger is None else ledger.implicit_sum)
        self.epsilon_sum.append(nan if ledger is None else ledger.epsilon_sum)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=np.float64)

    def present(self, name: str) -> np.ndarray:
        """Column values with the empty (NaN) entries dropped."""
        c = self.column(name)
        return c[~np.isnan(c)]

    @property
    def sign_agreement_rate(self) -> float | None:
        return None if self.sign_total == 0 else self.sign_agree / self.sign_total


# -- environments -----------------------------------------------------------

def make_env(cfg: RunConfig, seed: int):
    env_rng = rngmod.make_rng(seed, rngmod.ENV)
    ec = cfg.env_config
    if cfg.env == "pendulum":
        params = PendulumParams(max_steps=None if ec.continuing else 200)
        return PendulumEnv(env_rng, params, discrete=cfg.agent != "a2c")
    if cfg.env == "random_mdp":
        spec = generate_random_mdp(ec.mdp_seed, ec.num_states, ec.num_actions, ergodic=True, gamma=ec.gamma)
    elif cfg.env == "swap":
        spec = swap_chain()
    else:
        spec = ring_mdp(ec.num_states)
    return MdpEnv(spec, env_rng)


# -- value-based agents ------------------------------------------------------

def _tile_spec(cfg: RunConfig, num_actions: int) -> TileCodingSpec:
    f = cfg.features
    return TileCodingSpec(f.num_tilings, f.tiles_per_dim, PENDULUM_LOW, PENDULUM_HIGH, num_actions, f.normalize)


def make_value(cfg: RunConfig, env, num_actions: int, init_rng: np.random.Generator):
    """Returns (value function, observation -> state representation)."""
    discrete = getattr(env, "discrete_obs", False)
    kind = cfg.approximator
    if kind == "tabular":
        if discrete:
            return TabularValue(env.num_states, num_actions), int
        grid = GridSpec(cfg.features.grid_bins, PENDULUM_LOW, PENDULUM_HIGH)
        return TabularValue(grid.num_cells, num_actions), lambda obs: grid.cell(observation_angle(obs))
    if kind in ("linear", "sigmoid"):
        cls = LinearValue if kind == "linear" else SigmoidLinearValue
        if discrete:
            n = env.num_states
            return cls(lambda s, a: one_hot_encode(int(s), a, n, num_actions), n * num_actions, num_actions), int
        spec = _tile_spec(cfg, num_actions)
        return cls(TileEncoder(spec), spec.dim, num_actions), observation_angle
    if discrete:
        spec = MlpSpec(env.num_states, cfg.hidden, num_actions)
        return MlpValue(spec, init_params(spec, init_rng), one_hot_input(env.num_states)), int
    spec = MlpSpec(3, cfg.hidden, num_actions)
    return MlpValue(spec, init_params(spec, init_rng)), np.asarray


class ValueAgent:
    def __init__(self, cfg: RunConfig, env, seed: int, r_bar0: float | None):
        self.cfg = cfg
        ac = cfg.agent_config
        self.policy_rng = rngmod.make_rng(seed, rngmod.POLICY)
        self.replay_rng = rngmod.make_rng(seed, rngmod.REPLAY)
        self.value, self.represent = make_value(cfg, env, env.num_actions, rngmod.make_rng(seed, rngmod.INIT))
        self.estimator = None
        if cfg.agent in ("diff_q", "centered_q"):
            self.estimator = AvgRewardEstimator(r_bar0 or 0.0, ac.eta, cfg.rule)
        self.ledger = EpsilonLedger(r_bar0 or 0.0) if self.estimator is not None else None
        self.tabular = cfg.approximator == "tabular" and cfg.agent in ("q", "diff_q")
        if self.tabular:
            self.q = TabularQ.zeros(self.value.num_states, self.value.num_actions)
        else:
            if not cfg.replay or cfg.approximator == "tabular":
                # online Q-learning bootstraps from the current weights: no lagged target network
                ac = dataclasses.replace(ac, tau_polyak=1.0)
            mode = {"q": "discounted", "diff_q": "differential", "centered_q": "centered"}[cfg.agent]
            self.learner = DqnLearner(self.value, ac, mode, self.estimator)
        self.buffer = ReplayBuffer(ac.buffer_capacity, ac.buffer_min) if cfg.replay else None
        self.steps = 0

    @property
    def r_bar(self):
        return None if self.estimator is None else self.estimator.r_bar

    def act(self, obs):
        s = self.represent(obs)
        q = self.q.table[s] if self.tabular else self.value.q_values([s])[0]
        return epsilon_greedy(q, self.cfg.agent_config.epsilon, self.policy_rng)

    def observe(self, obs, action, reward, next_obs, terminal):
        """Store/learn from one transition; returns (delta_e_mean, delta_i_mean) or None."""
        t = Transition(self.represent(obs), int(action), float(reward), self.represent(next_obs), bool(terminal))
        self.steps += 1
        ac = self.cfg.agent_config
        if self.tabular:
            if self.cfg.agent == "q":
                step = tabular_q_update(self.q, t, ac.alpha, ac.gamma)
            else:
                step, est = tabular_differential_q_step(self.q, self.estimator, t, ac.alpha)
                self._ledger(step.delta_e - step.delta_i, step.delta_i)
                self.estimator = est
            self.q = step.q
            return step.delta_e, step.delta_i
        if self.buffer is None:
            batch = [t]
        else:
            self.buffer.push(t)
            if not self.buffer.ready(ac.batch_size) or self.steps % ac.update_period:
                return None
            batch = self.buffer.sample(ac.batch_size, self.replay_rng)
        step = self.learner.update(batch)
        self.estimator = self.learner.estimator
        self._ledger(step.report.epsilon, step.report.implicit_mean)
        return step.report.explicit_mean, step.report.implicit_mean

    def _ledger(self, eps, di):
        if self.ledger is not None and self.estimator.rule != "none":
            self.ledger.update(self.cfg.agent_config.alpha, self.estimator.eta, eps, di)


# -- actor-critic ------------------------------------------------------------

class A2cAgent:
    def __init__(self, cfg: RunConfig, env, seed: int):
        self.cfg = cfg
        init_rng = rngmod.make_rng(seed, rngmod.INIT)
        self.policy_rng = rngmod.make_rng(seed, rngmod.POLICY)
        if cfg.approximator == "linear":
            spec = _tile_spec(cfg, 1)
            enc = TileEncoder(spec)
            self.critic = LinearValue(lambda s, a: enc(observation_angle(s), a), spec.dim, 1)
        else:
            spec = MlpSpec(3, cfg.hidden, 1)
            self.critic = MlpValue(spec, init_params(spec, init_rng))
        aspec = MlpSpec(3, cfg.actor_hidden, 2)
        self.actor = GaussianActor(aspec, env.max_action)
        self.actor_params = init_params(aspec, init_rng)
        self.critic_adam = self.actor_adam = None
        self.r_bar = None
        self.sign_agree = 0
        self.sign_total = 0
        self._pre = None

    def act(self, obs):
        action, pre, _ = self.actor.sample(self.actor_params, obs, self.policy_rng)
        self._pre = pre
        return action

    def observe(self, obs, action, reward, next_obs, terminal):
        t = ActorTransition(np.asarray(obs), np.asarray(action), self._pre, float(reward),
                            np.asarray(next_obs), bool(terminal))
        step = a2c_update(self.critic, self.actor, self.actor_params, t, self.cfg.agent_config,
                          self.cfg.rule, self.critic_adam, self.actor_adam)
        self.critic.params = step.critic_params
        self.actor_params = step.actor_params
        self.critic_adam, self.actor_adam = step.critic_adam, step.actor_adam
        rep = step.report
        if rep.delta_e != 0.0:
            self.sign_total += 1
            self.sign_agree += int(rep.signs_agree)
        return rep.delta_e, rep.delta_i


# -- driver ------------------------------------------------------------------

def run_seed(cfg: RunConfig, seed: int, r_bar0: float | None = None) -> RunMetrics:
    """One independent run; every random stream derives from ``seed``."""
    env = make_env(cfg, seed)
    agent = A2cAgent(cfg, env, seed) if cfg.agent == "a2c" else ValueAgent(cfg, env, seed, r_bar0)
    metrics = RunMetrics(seed, r_bar0=r_bar0)
    obs = env.reset()
    ep_return = 0.0
    for step in range(1, cfg.total_steps + 1):
        action = agent.act(obs)
        res = env.step(action)
        td = agent.observe(obs, action, res.reward, res.next_observation, res.terminal)
        ep_return += res.reward
        done = res.terminal or res.truncated
        de, di = td if td is not None else (None, None)
        metrics.append(step, de, di, agent.r_bar, ep_return if done else None, getattr(agent, "ledger", None))
        if done:
            obs = env.reset()
            ep_return = 0.0
        else:
            obs = res.next_observation
    if isinstance(agent, A2cAgent):
        metrics.sign_agree, metrics.sign_total = agent.sign_agree, agent.sign_total
    return metrics


def _run_one(args):
    cfg, seed, r_bar0 = args
    return run_seed(cfg, seed, r_bar0)


def run_experiment(cfg: RunConfig, jobs: int = 1) -> dict[str, list[RunMetrics]]:
    """All seeds (and every initial R-bar for avg_reward_estimate), keyed by output label."""
    variants = cfg.r_bar0 if cfg.experiment == "avg_reward_estimate" else (cfg.r_bar0[0] if cfg.r_bar0 else 0.0,)
    tasks = [(cfg, seed, r0) for r0 in variants for seed in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    out: dict[str, list[RunMetrics]] = {}
    for (_, seed, r0), m in zip(tasks, results):
        label = base_label(cfg)
        if cfg.experiment == "avg_reward_estimate":
            label += f"_rbar0_{r0:+.2f}"
        m.label = label
        out.setdefault(label, []).append(m)
        log.info("finished %s seed %d", label, seed)
    return out


def base_label(cfg: RunConfig) -> str:
    parts = [cfg.experiment, cfg.agent, cfg.approximator, cfg.env]
    if cfg.agent in ("diff_q", "centered_q", "a2c"):
        parts.append(cfg.rule)
    return "_".join(parts)
