"""Action-value functions over a flat parameter vector.

Every value function exposes the same small surface so the TD-error code and the
learners never care which approximator they hold:

* ``q_values(states, params=None)`` -> (B, num_actions) array
* ``evaluate(state, action)`` / ``evaluate_batch(states, actions, params=None)``
* ``snapshot()`` and ``evaluate_at(snapshot, state, action)``
* ``grad_batch(states, actions, coeffs, params=None)`` -> sum_j coeffs[j] * dQ(s_j, a_j)/dw

A state-value function is the one-action case (``num_actions == 1``).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .features import FeatureVector
from .nn import MlpSpec, ParamVector, mlp_forward_batch, mlp_vjp


class ValueFunction:
    num_actions: int
    params: ParamVector

    def q_values(self, states: Sequence, params: ParamVector | None = None) -> np.ndarray:
        raise NotImplementedError

    def grad_batch(self, states, actions, coeffs, params: ParamVector | None = None) -> ParamVector:
        raise NotImplementedError

    def evaluate_batch(self, states, actions, params: ParamVector | None = None) -> np.ndarray:
        q = self.q_values(states, params)
        return q[np.arange(len(q)), np.asarray(actions, dtype=np.int64)]

    def evaluate(self, state, action) -> float:
        return float(self.evaluate_batch([state], [action])[0])

    def snapshot(self) -> ParamVector:
        return self.params.copy()

    def evaluate_at(self, snapshot: ParamVector, state, action) -> float:
        return float(self.evaluate_batch([state], [action], snapshot)[0])

    def max_q(self, states, params: ParamVector | None = None) -> np.ndarray:
        return self.q_values(states, params).max(axis=1)

    def _p(self, params):
        return (self.params if params is None else params).values


class TabularValue(ValueFunction):
    """Q table stored row-major as a flat vector; states are integer ids."""

    def __init__(self, num_states: int, num_actions: int, params: ParamVector | None = None):
        self.num_states = num_states
        self.num_actions = num_actions
        self.params = params if params is not None else ParamVector(np.zeros(num_states * num_actions))

    def q_values(self, states, params=None):
        table = self._p(params).reshape(self.num_states, self.num_actions)
        return table[np.asarray(states, dtype=np.int64)]

    def grad_batch(self, states, actions, coeffs, params=None):
        g = np.zeros(len(self.params))
        idx = np.asarray(states, dtype=np.int64) * self.num_actions + np.asarray(actions, dtype=np.int64)
        np.add.at(g, idx, np.asarray(coeffs, dtype=np.float64))
        return ParamVector(g)

    def features(self, state, action) -> FeatureVector:
        return FeatureVector([state * self.num_actions + action], [1.0], len(self.params))


class LinearValue(ValueFunction):
    """Q(s, a) = w . x(s, a) with sparse features from ``encoder(state, action)``."""

    def __init__(self, encoder: Callable[[object, int], FeatureVector], dim: int, num_actions: int,
                 params: ParamVector | None = None):
        self.encoder = encoder
        self.dim = dim
        self.num_actions = num_actions
        self.params = params if params is not None else ParamVector(np.zeros(dim))

    def features(self, state, action) -> FeatureVector:
        return self.encoder(state, action)

    def _z(self, states, params):
        w = self._p(params)
        return np.array([[self.encoder(s, a).dot(w) for a in range(self.num_actions)] for s in states])

    def q_values(self, states, params=None):
        return self._z(states, params)

    def evaluate_batch(self, states, actions, params=None):
        w = self._p(params)
        return np.array([self.encoder(s, int(a)).dot(w) for s, a in zip(states, actions)])

    def grad_batch(self, states, actions, coeffs, params=None):
        g = np.zeros(self.dim)
        for s, a, c in zip(states, actions, coeffs):
            x = self.encoder(s, int(a))
            g[x.indices] += c * x.values
        return ParamVector(g)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class SigmoidLinearValue(LinearValue):
    """Q(s, a) = sigmoid(w . x(s, a)): a single nonlinearity on top of linear features."""

    def q_values(self, states, params=None):
        return _sigmoid(self._z(states, params))

    def evaluate_batch(self, states, actions, params=None):
        return _sigmoid(super().evaluate_batch(states, actions, params))

    def grad_batch(self, states, actions, coeffs, params=None):
        w = self._p(params)
        g = np.zeros(self.dim)
        for s, a, c in zip(states, actions, coeffs):
            x = self.encoder(s, int(a))
            sg = _sigmoid(x.dot(w))
            g[x.indices] += c * sg * (1.0 - sg) * x.values
        return ParamVector(g)


class MlpValue(ValueFunction):
    """One network output per action; ``input_map`` turns a state into the input vector."""

    def __init__(self, spec: MlpSpec, params: ParamVector, input_map: Callable | None = None):
        self.spec = spec
        self.num_actions = spec.output_dim
        self.params = params
        self.input_map = input_map

    def inputs(self, states) -> np.ndarray:
        if self.input_map is None:
            return np.asarray(states, dtype=np.float64).reshape(len(states), -1)
        return np.array([self.input_map(s) for s in states], dtype=np.float64)

    def q_values(self, states, params=None):
        return mlp_forward_batch(self.spec, self.params if params is None else params, self.inputs(states))

    def grad_batch(self, states, actions, coeffs, params=None):
        X = self.inputs(states)
        G = np.zeros((len(X), self.num_actions))
        G[np.arange(len(X)), np.asarray(actions, dtype=np.int64)] = coeffs
        return mlp_vjp(self.spec, self.params if params is None else params, X, G)


def one_hot_input(num_states: int) -> Callable[[int], np.ndarray]:
    eye = np.eye(num_states)
    return lambda s: eye[int(s)]
