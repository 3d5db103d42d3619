"""Desk-scale environments: finite MDPs with exact tables and the inverted pendulum."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class MdpSpec:
    """Finite MDP with joint table ``transition[s, a, s', r_index]``."""

    transition: np.ndarray
    rewards: np.ndarray
    gamma: float = 0.9
    start_distribution: np.ndarray | None = None

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=np.float64)
        r = np.asarray(self.rewards, dtype=np.float64)
        if P.ndim != 4 or P.shape[0] != P.shape[2] or P.shape[3] != r.size:
            raise ValueError("transition must have shape (S, A, S, len(rewards))")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=(2, 3)) - 1.0)) > 1e-12:
            raise ValueError("each (s, a) row must be a probability distribution")
        if not np.all(np.isfinite(r)):
            raise ValueError("rewards must be finite")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        d0 = self.start_distribution
        d0 = np.full(P.shape[0], 1.0 / P.shape[0]) if d0 is None else np.asarray(d0, dtype=np.float64)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "start_distribution", d0)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def reward_range(self) -> tuple[float, float]:
        return float(self.rewards.min()), float(self.rewards.max())


@dataclass
class StepResult:
    next_observation: Any
    reward: float
    terminal: bool = False
    truncated: bool = False


def generate_random_mdp(seed: int, num_states: int, num_actions: int, ergodic: bool = True,
                        num_rewards: int = 3, gamma: float = 0.9) -> MdpSpec:
    """Random MDP; with ``ergodic`` every next-state probability is at least 0.01/num_states."""
    if num_states < 2 or num_actions < 2:
        raise ValueError("need at least 2 states and 2 actions")
    rng = np.random.Generator(np.random.PCG64(seed))
    rewards = np.sort(rng.uniform(-1.0, 1.0, size=num_rewards))
    next_state = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    if ergodic:
        next_state = 0.99 * next_state + 0.01 / num_states
    reward_given = rng.dirichlet(np.full(num_rewards, 0.5), size=(num_states, num_actions, num_states))
    P = next_state[..., None] * reward_given
    P /= P.sum(axis=(2, 3), keepdims=True)
    return MdpSpec(P, rewards, gamma)


def swap_chain(rewards=(0.0, 1.0)) -> MdpSpec:
    """Two states that always swap; reward is collected on leaving each state."""
    P = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for a in range(2):
            P[s, a, 1 - s, s] = 1.0
    return MdpSpec(P, np.asarray(rewards, dtype=np.float64), gamma=0.9)


def ring_mdp(num_states: int, stay_prob: float = 0.1) -> MdpSpec:
    """Ergodic ring: action 0 steps forward, action 1 steps back, each may stall.

    Reward 1 on entering state 0, else 0.
    """
    n = num_states
    P = np.zeros((n, 2, n, 2))
    for s in range(n):
        for a, move in ((0, 1), (1, -1)):
            nxt = (s + move) % n
            P[s, a, nxt, int(nxt == 0)] += 1.0 - stay_prob
            P[s, a, s, int(s == 0)] += stay_prob
    return MdpSpec(P, np.array([0.0, 1.0]), gamma=0.9)


def mdp_step(spec: MdpSpec, state_id: int, action_id: int, rng: np.random.Generator) -> StepResult:
    """Sample (s', r) by inverse CDF on one uniform draw."""
    row = spec.transition[state_id, action_id].ravel()
    u = rng.random()
    k = int(np.searchsorted(np.cumsum(row), u, side="right"))
    k = min(k, row.size - 1)
    while row[k] == 0.0 and k > 0:  # guard against cumsum rounding past the last mass
        k -= 1
    nxt, r_idx = divmod(k, spec.rewards.size)
    return StepResult(nxt, float(spec.rewards[r_idx]))


class MdpEnv:
    """Continuing (never-terminating) environment wrapper around an MdpSpec."""

    discrete_obs = True

    def __init__(self, spec: MdpSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.state = 0

    @property
    def num_actions(self) -> int:
        return self.spec.num_actions

    @property
    def num_states(self) -> int:
        return self.spec.num_states

    @property
    def reward_range(self):
        return self.spec.reward_range

    def reset(self) -> int:
        self.state = int(self.rng.choice(self.spec.num_states, p=self.spec.start_distribution))
        return self.state

    def step(self, action: int) -> StepResult:
        res = mdp_step(self.spec, self.state, action, self.rng)
        self.state = res.next_observation
        return res


@dataclass(frozen=True)
class PendulumParams:
    g: float = 10.0
    m: float = 1.0
    l: float = 1.0
    dt: float = 0.05
    max_torque: float = 2.0
    max_speed: float = 8.0
    max_steps: int | None = 200


def wrap_angle(theta: float) -> float:
    return ((theta + np.pi) % (2.0 * np.pi)) - np.pi


def pendulum_step(state, torque: float, params: PendulumParams = PendulumParams()) -> tuple[tuple[float, float], float]:
    """Advance (theta, theta_dot) one step; returns the new state and the reward."""
    th, thdot = float(state[0]), float(state[1])
    u = float(np.clip(torque, -params.max_torque, params.max_torque))
    th_n = wrap_angle(th)
    reward = -(th_n ** 2 + 0.1 * thdot ** 2 + 0.001 * u ** 2)
    acc = 3.0 * params.g / (2.0 * params.l) * np.sin(th) + 3.0 * u / (params.m * params.l ** 2)
    new_thdot = float(np.clip(thdot + acc * params.dt, -params.max_speed, params.max_speed))
    new_th = wrap_angle(th + new_thdot * params.dt)
    return (new_th, new_thdot), float(reward)


def pendulum_observation(state) -> np.ndarray:
    th, thdot = state
    return np.array([np.cos(th), np.sin(th), thdot])


def observation_angle(obs) -> np.ndarray:
    """(cos, sin, theta_dot) -> (theta, theta_dot)."""
    return np.array([np.arctan2(obs[1], obs[0]), obs[2]])


PENDULUM_REWARD_MIN = -(np.pi ** 2 + 0.1 * 8.0 ** 2 + 0.001 * 2.0 ** 2)

DISCRETE_TORQUES = (-2.0, 0.0, 2.0)


@dataclass
class PendulumEnv:
    """Swing-up pendulum. Never terminal; truncated after ``max_steps`` unless that is None."""

    rng: np.random.Generator
    params: PendulumParams = field(default_factory=PendulumParams)
    discrete: bool = True
    state: tuple[float, float] = (0.0, 0.0)
    t: int = 0

    discrete_obs = False
    obs_dim = 3

    @property
    def num_actions(self) -> int:
        return len(DISCRETE_TORQUES)

    @property
    def max_action(self) -> float:
        return self.params.max_torque

    @property
    def reward_range(self):
        return PENDULUM_REWARD_MIN, 0.0

    def reset(self) -> np.ndarray:
        self.state = (float(self.rng.uniform(-np.pi, np.pi)), float(self.rng.uniform(-1.0, 1.0)))
        self.t = 0
        return pendulum_observation(self.state)

    def step(self, action) -> StepResult:
        torque = DISCRETE_TORQUES[int(action)] if self.discrete else float(np.ravel(action)[0])
        self.state, reward = pendulum_step(self.state, torque, self.params)
        self.t += 1
        truncated = self.params.max_steps is not None and self.t >= self.params.max_steps
        return StepResult(pendulum_observation(self.state), reward, False, truncated)
