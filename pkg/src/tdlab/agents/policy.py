"""Action selection: epsilon-greedy over Q values and the tanh-squashed Gaussian actor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import MlpSpec, ParamVector, mlp_forward, mlp_vjp

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PolicySpec:
    kind: str = "epsilon_greedy"
    epsilon: float = 0.1
    max_action: float = 1.0
    log_std_min: float = LOG_STD_MIN
    log_std_max: float = LOG_STD_MAX

    def __post_init__(self):
        if self.kind not in ("epsilon_greedy", "squashed_gaussian"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")


def epsilon_greedy(q_row: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform action with probability epsilon, else argmax with ties to the lowest index."""
    if rng.random() < epsilon:
        return int(rng.integers(len(q_row)))
    return int(np.argmax(q_row))


@dataclass(frozen=True)
class GaussianActor:
    """Network whose outputs are [mean (action_dim), raw log-std (action_dim)]."""

    spec: MlpSpec
    max_action: float = 1.0
    log_std_min: float = LOG_STD_MIN
    log_std_max: float = LOG_STD_MAX

    @property
    def action_dim(self) -> int:
        return self.spec.output_dim // 2

    def head(self, params: ParamVector, obs):
        out = mlp_forward(self.spec, params, np.asarray(obs, dtype=np.float64))
        k = self.action_dim
        mean, raw = out[:k], out[k:]
        return mean, np.clip(raw, self.log_std_min, self.log_std_max), raw

    def sample(self, params: ParamVector, obs, rng: np.random.Generator):
        """Returns (action, pre_tanh, log_prob)."""
        mean, log_std, _ = self.head(params, obs)
        x = mean + np.exp(log_std) * rng.standard_normal(self.action_dim)
        return self.max_action * np.tanh(x), x, self.log_prob_pre(params, obs, x)

    def log_prob_pre(self, params: ParamVector, obs, x) -> float:
        mean, log_std, _ = self.head(params, obs)
        x = np.asarray(x, dtype=np.float64)
        z = (x - mean) / np.exp(log_std)
        gauss = -0.5 * z * z - log_std - 0.5 * _LOG_2PI
        # log |d a / d x| = log(max_action) + log(1 - tanh(x)^2), stable form
        log_det = np.log(self.max_action) + 2.0 * (np.log(2.0) - x - np.logaddexp(0.0, -2.0 * x))
        return float(np.sum(gauss - log_det))

    def grad_log_prob(self, params: ParamVector, obs, x) -> ParamVector:
        """d log pi(a|s) / d params at fixed pre-tanh sample x; the clamp blocks gradient outside its range."""
        mean, log_std, raw = self.head(params, obs)
        std = np.exp(log_std)
        z = (np.asarray(x, dtype=np.float64) - mean) / std
        d_mean = z / std
        d_log_std = (z * z - 1.0) * ((raw >= self.log_std_min) & (raw <= self.log_std_max))
        g = np.concatenate([d_mean, d_log_std])
        return mlp_vjp(self.spec, params, np.asarray(obs, dtype=np.float64), g)


def select_action(policy: PolicySpec, model, observation, rng: np.random.Generator, params=None):
    """epsilon_greedy: ``model`` is a ValueFunction; squashed_gaussian: a GaussianActor with ``params``."""
    if policy.kind == "epsilon_greedy":
        return epsilon_greedy(model.q_values([observation])[0], policy.epsilon, rng)
    action, _, _ = model.sample(params, observation, rng)
    return action
