from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError, ContractError
from ..replay import Transition

RULES = ("implicit", "explicit", "smallest_magnitude", "none")


@dataclass(frozen=True)
class TabularQ:
    table: np.ndarray

    @classmethod
    def zeros(cls, num_states: int, num_actions: int) -> "TabularQ":
        return cls(np.zeros((num_states, num_actions)))

    def greedy_policy(self) -> np.ndarray:
        return np.argmax(self.table, axis=1)


@dataclass(frozen=True)
class AvgRewardEstimator:
    r_bar: float = 0.0
    eta: float = 1.0
    rule: str = "implicit"

    def __post_init__(self):
        if self.rule not in RULES:
            raise ConfigError(f"unknown average-reward rule {self.rule!r}")
        if self.eta <= 0:
            raise ConfigError("eta must be positive")
        if not np.isfinite(self.r_bar):
            raise ConfigError("r_bar must be finite")

    def advanced(self, increment: float) -> "AvgRewardEstimator":
        return AvgRewardEstimator(self.r_bar + increment, self.eta, self.rule)


class TabularStep(NamedTuple):
    q: TabularQ
    delta_e: float
    delta_i: float
    degenerate: bool  # alpha == 0: delta_i reported as delta_e


def _apply(q: TabularQ, s: int, a: int, delta: float, alpha: float) -> TabularStep:
    table = q.table.copy()
    before = table[s, a]
    table[s, a] = before + alpha * delta
    if alpha == 0:
        return TabularStep(TabularQ(table), delta, delta, True)
    return TabularStep(TabularQ(table), delta, (table[s, a] - before) / alpha, False)


def tabular_q_update(q: TabularQ, transition: Transition, alpha: float, gamma: float) -> TabularStep:
    t = transition
    boot = 0.0 if t.terminal else gamma * q.table[t.next_state].max()
    delta = t.reward + boot - q.table[t.state, t.action]
    return _apply(q, t.state, t.action, float(delta), alpha)


def tabular_differential_q_update(q: TabularQ, est: AvgRewardEstimator, transition: Transition,
                                  alpha: float):
    """Differential Q-learning step. Returns (q', est', delta)."""
    t = transition
    if t.terminal:
        raise ContractError("differential Q-learning needs a continuing task")
    delta = float(t.reward - est.r_bar + q.table[t.next_state].max() - q.table[t.state, t.action])
    step = _apply(q, t.state, t.action, delta, alpha)
    return step.q, est.advanced(est.eta * alpha * delta), delta


def tabular_differential_q_step(q: TabularQ, est: AvgRewardEstimator, transition: Transition,
                                alpha: float):
    """Same update, also exposing the implicit error measured from the table change."""
    t = transition
    if t.terminal:
        raise ContractError("differential Q-learning needs a continuing task")
    delta = float(t.reward - est.r_bar + q.table[t.next_state].max() - q.table[t.state, t.action])
    step = _apply(q, t.state, t.action, delta, alpha)
    if est.rule == "none":
        return step, est
    d = step.delta_i if est.rule == "implicit" else delta
    return step, est.advanced(est.eta * alpha * d)
