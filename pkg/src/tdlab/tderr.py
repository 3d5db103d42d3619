"""Explicit and implicit TD errors, their gap, and closed-form linear predictions.

The explicit error is the bootstrapped target minus the current prediction. The
implicit error is the change in the prediction across one update divided by the
step size used for that update.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, ContractError
from .features import FeatureVector
from .nn import ParamVector
from .replay import Transition
from .values import ValueFunction


@dataclass(frozen=True)
class TdMode:
    """Target form: ``discounted`` (gamma), ``differential`` (r_bar) or ``centered`` (gamma, r_bar)."""

    kind: str = "discounted"
    gamma: float = 0.99
    r_bar: float = 0.0

    def __post_init__(self):
        if self.kind not in ("discounted", "differential", "centered"):
            raise ConfigError(f"unknown TD mode {self.kind!r}")
        if self.kind != "differential" and not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")

    @classmethod
    def discounted(cls, gamma):
        return cls("discounted", gamma, 0.0)

    @classmethod
    def differential(cls, r_bar):
        return cls("differential", 1.0, r_bar)

    @classmethod
    def centered(cls, gamma, r_bar):
        return cls("centered", gamma, r_bar)


@dataclass(frozen=True)
class TdReport:
    explicit_per_sample: np.ndarray
    implicit_per_sample: np.ndarray
    explicit_mean: float
    implicit_mean: float
    epsilon: float
    alpha_used: float

    @property
    def abs_gap(self) -> float:
        return abs(self.epsilon)


def make_report(explicit, implicit, alpha: float) -> TdReport:
    e = np.asarray(explicit, dtype=np.float64)
    i = np.asarray(implicit, dtype=np.float64)
    em, im = float(e.mean()), float(i.mean())
    return TdReport(e, i, em, im, em - im, alpha)


def unpack(batch: Sequence[Transition]):
    """Column view of a batch: states, actions, rewards, next states, terminal flags."""
    if not batch:
        raise ContractError("batch must be non-empty")
    states = [t.state for t in batch]
    actions = np.array([t.action for t in batch], dtype=np.int64)
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    next_states = [t.next_state for t in batch]
    terminal = np.array([t.terminal for t in batch], dtype=bool)
    return states, actions, rewards, next_states, terminal


def explicit_td(batch: Sequence[Transition], value: ValueFunction, target_value: ValueFunction,
                mode: TdMode) -> np.ndarray:
    states, actions, rewards, next_states, terminal = unpack(batch)
    if mode.kind == "differential" and terminal.any():
        raise ContractError("differential TD errors are defined for continuing tasks only")
    boot = target_value.max_q(next_states)
    if mode.kind == "differential":
        target = rewards - mode.r_bar + boot
    else:
        boot = np.where(terminal, 0.0, boot)
        shift = mode.r_bar if mode.kind == "centered" else 0.0
        target = rewards - shift + mode.gamma * boot
    return target - value.evaluate_batch(states, actions)


def implicit_td(batch: Sequence[Transition], value_before: ParamVector, value_after: ParamVector,
                value: ValueFunction, alpha: float) -> np.ndarray:
    if alpha <= 0:
        raise ConfigError("alpha must be positive for the implicit TD error")
    states, actions, *_ = unpack(batch)
    before = value.evaluate_batch(states, actions, value_before)
    after = value.evaluate_batch(states, actions, value_after)
    return (after - before) / alpha


def gram_means(batch_features: Sequence[FeatureVector]) -> np.ndarray:
    """Row means of the batch Gram matrix: (1/B) sum_j <x_k, x_j> for each k."""
    dim = batch_features[0].dim
    X = np.zeros((len(batch_features), dim))
    for k, x in enumerate(batch_features):
        X[k, x.indices] = x.values
    return (X @ X.T).mean(axis=1)


def predict_implicit_linear(batch_features: Sequence[FeatureVector], explicit) -> float:
    """Batch-mean implicit TD error that one linear SGD step on the mean-square loss must produce."""
    e = np.asarray(explicit, dtype=np.float64)
    if len(batch_features) != e.size:
        raise ValueError("features and explicit errors differ in length")
    return float(np.mean(e * gram_means(batch_features)))


def batch_equality_condition(batch_features: Sequence[FeatureVector], tol: float = 1e-9):
    """True when every sample's mean inner product with the batch equals one."""
    if not batch_features:
        raise ValueError("batch must be non-empty")
    m = gram_means(batch_features)
    return bool(np.all(np.abs(m - 1.0) <= tol)), m


@dataclass
class EpsilonLedger:
    """Running decomposition of average-reward updates into implicit and gap parts.

    After n updates, ``r_bar0 + implicit_sum + epsilon_sum`` is the explicit-rule
    estimate, and ``r_bar0 + implicit_sum`` is what the implicit rule would have
    accumulated from the same TD errors.
    """

    r_bar0: float = 0.0
    implicit_sum: float = 0.0
    epsilon_sum: float = 0.0
    updates: int = 0

    def update(self, alpha: float, eta: float, epsilon_t: float, delta_i_t: float) -> "EpsilonLedger":
        self.implicit_sum += eta * alpha * delta_i_t
        self.epsilon_sum += eta * alpha * epsilon_t
        self.updates += 1
        return self

    def reconstruct(self) -> float:
        return self.r_bar0 + self.implicit_sum + self.epsilon_sum


def epsilon_ledger_update(ledger: EpsilonLedger, alpha: float, eta: float, epsilon_t: float,
                          delta_i_t: float) -> EpsilonLedger:
    return ledger.update(alpha, eta, epsilon_t, delta_i_t)
