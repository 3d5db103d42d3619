from .a2c import A2cReport, A2cStep, ActorTransition, a2c_update, actor_loss
from .dqn import AgentConfig, DqnLearner, DqnStep, dqn_update, r_bar_increment
from .policy import GaussianActor, PolicySpec, epsilon_greedy, select_action
from .tabular import (
    AvgRewardEstimator,
    TabularQ,
    TabularStep,
    tabular_differential_q_step,
    tabular_differential_q_update,
    tabular_q_update,
)

__all__ = [
    "A2cReport",
    "A2cStep",
    "ActorTransition",
    "AgentConfig",
    "AvgRewardEstimator",
    "DqnLearner",
    "DqnStep",
    "GaussianActor",
    "PolicySpec",
    "TabularQ",
    "TabularStep",
    "a2c_update",
    "actor_loss",
    "dqn_update",
    "epsilon_greedy",
    "r_bar_increment",
    "select_action",
    "tabular_differential_q_step",
    "tabular_differential_q_update",
    "tabular_q_update",
]
