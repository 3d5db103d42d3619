"""DQN-family updates with the average-reward rule as a switch.

One function covers discounted DQN, differential DQN (implicit / explicit /
smallest-magnitude average-reward updates) and value-based reward centering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import ConfigError
from ..nn import AdamState, LossSpec, ParamVector, optimizer_step, polyak_update
from ..replay import Transition
from ..tderr import TdMode, TdReport, explicit_td, implicit_td, make_report, unpack
from ..values import ValueFunction
from .tabular import AvgRewardEstimator


@dataclass(frozen=True)
class AgentConfig:
    alpha: float = 2e-4
    eta: float = 1.0
    gamma: float = 0.99
    lam: float = 1.0
    loss: str = "smooth_l1"
    optimizer: str = "adam"
    batch_size: int = 32
    tau_polyak: float = 0.005
    update_period: int = 1
    target_update_period: int = 1
    epsilon: float = 0.1
    buffer_min: int = 100
    buffer_capacity: int = 100_000

    def __post_init__(self):
        for name in ("alpha", "eta", "lam", "batch_size", "update_period", "target_update_period",
                     "buffer_min", "buffer_capacity"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if not 0.0 < self.tau_polyak <= 1.0:
            raise ConfigError("tau_polyak must lie in (0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        LossSpec(self.loss, self.lam)

    @property
    def loss_spec(self) -> LossSpec:
        return LossSpec(self.loss, self.lam)


class DqnStep(NamedTuple):
    params: ParamVector
    target_params: ParamVector
    adam: AdamState | None
    report: TdReport
    estimator: AvgRewardEstimator | None
    r_bar_increment: float


def _mode(kind: str, config: AgentConfig, est: AvgRewardEstimator | None) -> TdMode:
    if kind == "discounted":
        return TdMode.discounted(config.gamma)
    if est is None:
        raise ConfigError(f"{kind} mode needs an average-reward estimator")
    if kind == "differential":
        if config.gamma != 1.0:
            raise ConfigError("differential targets are undiscounted; set gamma = 1")
        return TdMode.differential(est.r_bar)
    if kind == "centered":
        return TdMode.centered(config.gamma, est.r_bar)
    raise ConfigError(f"unknown mode {kind!r}")


def r_bar_increment(rule: str, eta: float, alpha: float, report: TdReport) -> float:
    if rule == "implicit":
        return eta * alpha * report.implicit_mean
    if rule == "explicit":
        return eta * alpha * report.explicit_mean
    if rule == "smallest_magnitude":
        y = int(np.argmin(np.abs(report.explicit_per_sample)))  # first minimum on ties
        return eta * alpha * float(report.explicit_per_sample[y])
    return 0.0


def dqn_update(value: ValueFunction, target_params: ParamVector, batch: Sequence[Transition],
               config: AgentConfig, mode: str = "discounted",
               estimator: AvgRewardEstimator | None = None, adam: AdamState | None = None) -> DqnStep:
    """One gradient update on a sampled batch; ``value`` itself is not modified."""
    td_mode = _mode(mode, config, estimator)
    w = value.params
    target_view = _View(value, target_params)
    delta_e = explicit_td(batch, value, target_view, td_mode)

    states, actions, *_ = unpack(batch)
    # d loss / d Q(s_j, a_j) = -L'(delta_j) / B
    coeffs = -config.loss_spec.derivative(delta_e) / len(batch)
    grad = value.grad_batch(states, actions, coeffs)
    if config.optimizer == "adam" and adam is None:
        adam = AdamState.zeros(len(w))
    w_new, adam = optimizer_step(config.optimizer, w, grad, config.alpha,
                                 adam if config.optimizer == "adam" else None)

    delta_i = implicit_td(batch, w, w_new, value, config.alpha)
    report = make_report(delta_e, delta_i, config.alpha)

    inc = 0.0
    if estimator is not None and mode != "discounted":
        inc = r_bar_increment(estimator.rule, estimator.eta, config.alpha, report)
        estimator = estimator.advanced(inc)
    target_new = polyak_update(target_params, w_new, config.tau_polyak)
    return DqnStep(w_new, target_new, adam, report, estimator, inc)


class _View:
    """Read-only view of a value function at other parameters (the target network)."""

    def __init__(self, value: ValueFunction, params: ParamVector):
        self._value = value
        self._params = params

    def max_q(self, states):
        return self._value.max_q(states, self._params)


@dataclass
class DqnLearner:
    """Mutable owner of the online/target parameters, optimizer state and estimator."""

    value: ValueFunction
    config: AgentConfig
    mode: str = "discounted"
    estimator: AvgRewardEstimator | None = None
    target_params: ParamVector | None = None
    adam: AdamState | None = None
    updates: int = field(default=0)

    def __post_init__(self):
        if self.target_params is None:
            self.target_params = self.value.snapshot()
        _mode(self.mode, self.config, self.estimator)

    @property
    def r_bar(self) -> float | None:
        return None if self.estimator is None else self.estimator.r_bar

    def update(self, batch: Sequence[Transition]) -> DqnStep:
        step = dqn_update(self.value, self.target_params, batch, self.config, self.mode,
                          self.estimator, self.adam)
        self.value.params = step.params
        self.adam = step.adam
        self.estimator = step.estimator
        self.updates += 1
        if self.updates % self.config.target_update_period == 0:
            self.target_params = step.target_params
        return step
