"""Online one-step advantage actor-critic with explicit or implicit TD advantages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError
from ..nn import AdamState, LossSpec, ParamVector, optimizer_step
from ..values import ValueFunction
from .dqn import AgentConfig
from .policy import GaussianActor


@dataclass(frozen=True)
class ActorTransition:
    state: np.ndarray
    action: np.ndarray
    pre_tanh: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool = False


class A2cReport(NamedTuple):
    delta_e: float
    delta_i: float
    delta_used: float
    log_prob: float
    actor_loss: float

    @property
    def signs_agree(self) -> bool:
        return np.sign(self.delta_e) == np.sign(self.delta_i)


class A2cStep(NamedTuple):
    critic_params: ParamVector
    actor_params: ParamVector
    report: A2cReport
    critic_adam: AdamState | None
    actor_adam: AdamState | None


def actor_loss(log_prob: float, delta: float) -> float:
    return -log_prob * delta


def a2c_update(critic: ValueFunction, actor: GaussianActor, actor_params: ParamVector,
               transition: ActorTransition, config: AgentConfig, advantage_rule: str = "implicit",
               critic_adam: AdamState | None = None, actor_adam: AdamState | None = None) -> A2cStep:
    """Critic and actor step from one transition. ``critic`` is a one-action value function."""
    if advantage_rule not in ("implicit", "explicit"):
        raise ConfigError(f"unknown advantage rule {advantage_rule!r}")
    t = transition
    w = critic.params
    v_s = critic.evaluate(t.state, 0)
    v_next = 0.0 if t.terminal else critic.evaluate(t.next_state, 0)
    delta_e = t.reward + config.gamma * v_next - v_s

    loss = LossSpec(config.loss, config.lam)
    coeff = -float(loss.derivative(delta_e))
    grad = critic.grad_batch([t.state], [0], [coeff])
    if config.optimizer == "adam":
        critic_adam = critic_adam or AdamState.zeros(len(w))
        w_new, critic_adam = optimizer_step("adam", w, grad, config.alpha, critic_adam)
    else:
        w_new, _ = optimizer_step("sgd", w, grad, config.alpha)
    delta_i = (critic.evaluate_at(w_new, t.state, 0) - v_s) / config.alpha
    delta = delta_i if advantage_rule == "implicit" else delta_e

    log_prob = actor.log_prob_pre(actor_params, t.state, t.pre_tanh)
    u_new = actor_params
    if delta != 0.0:
        # ascend delta * log pi  ==  descend the actor loss -log pi * delta
        g = actor.grad_log_prob(actor_params, t.state, t.pre_tanh)
        g = g.with_values(-delta * g.values)
        step = config.eta * config.alpha
        if config.optimizer == "adam":
            actor_adam = actor_adam or AdamState.zeros(len(actor_params))
            u_new, actor_adam = optimizer_step("adam", actor_params, g, step, actor_adam)
        else:
            u_new, _ = optimizer_step("sgd", actor_params, g, step)
    report = A2cReport(float(delta_e), float(delta_i), float(delta), log_prob, actor_loss(log_prob, delta))
    return A2cStep(w_new, u_new, report, critic_adam, actor_adam)
