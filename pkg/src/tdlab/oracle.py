"""Independent reference computations: dynamic programming, stationary distributions,
finite differences and a loop-based network forward pass.

Nothing here calls into the modules it is used to check.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError


def expected_rewards(transition: np.ndarray, rewards: np.ndarray) -> np.ndarray:
    """E[r | s, a]."""
    return np.einsum("sakr,r->sa", transition, rewards)


def next_state_probs(transition: np.ndarray) -> np.ndarray:
    """p(s' | s, a)."""
    return transition.sum(axis=3)


def value_iteration(spec, tolerance: float = 1e-10, max_iter: int = 1_000_000) -> np.ndarray:
    """Optimal action values by iterating the Bellman optimality operator to a sup-norm residual < tolerance."""
    gamma = spec.gamma
    if gamma >= 1.0:
        raise ConfigError("value iteration needs gamma < 1; use average_reward_oracle instead")
    R = expected_rewards(spec.transition, spec.rewards)
    P = next_state_probs(spec.transition)
    q = np.zeros_like(R)
    for _ in range(max_iter):
        q_new = R + gamma * P @ q.max(axis=1)
        if np.max(np.abs(q_new - q)) < tolerance * (1.0 - gamma):
            return q_new
        q = q_new
    raise RuntimeError("value iteration did not converge")


def bellman_residual(spec, q: np.ndarray) -> float:
    R = expected_rewards(spec.transition, spec.rewards)
    P = next_state_probs(spec.transition)
    return float(np.max(np.abs(R + spec.gamma * P @ q.max(axis=1) - q)))


def policy_matrix(policy, num_states: int, num_actions: int) -> np.ndarray:
    """Deterministic action ids (length S) or a stochastic (S, A) matrix -> (S, A) matrix."""
    pi = np.asarray(policy, dtype=np.float64)
    if pi.ndim == 1:
        out = np.zeros((num_states, num_actions))
        out[np.arange(num_states), pi.astype(np.int64)] = 1.0
        return out
    return pi


def _single_recurrent_class(P: np.ndarray) -> bool:
    n = P.shape[0]
    reach = (P > 0).astype(np.int64) | np.eye(n, dtype=np.int64)
    for _ in range(int(math.ceil(math.log2(max(n, 2)))) + 1):
        reach = ((reach @ reach) > 0).astype(np.int64)
    # states reachable from everywhere form the unique closed class
    return bool(reach.all(axis=0).any())


def stationary_distribution(P: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000_000) -> np.ndarray:
    """Power iteration on the lazy chain (P + I)/2, which shares P's stationary law."""
    n = P.shape[0]
    lazy = 0.5 * (P + np.eye(n))
    d = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        d_new = d @ lazy
        if np.max(np.abs(d_new - d)) < tol:
            return d_new / d_new.sum()
        d = d_new
    raise RuntimeError("power iteration did not converge")


def average_reward_oracle(spec, policy) -> float:
    """Long-run reward rate of ``policy`` (deterministic ids or (S, A) probabilities)."""
    pi = policy_matrix(policy, spec.num_states, spec.num_actions)
    P = np.einsum("sa,sak->sk", pi, next_state_probs(spec.transition))
    if not _single_recurrent_class(P):
        raise ConfigError("policy induces more than one recurrent class")
    d = stationary_distribution(P)
    R = expected_rewards(spec.transition, spec.rewards)
    return float(d @ (pi * R).sum(axis=1))


def finite_diff_gradient(f, params, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``f`` over every coordinate of ``params``."""
    if h <= 0:
        raise ValueError("h must be positive")
    base = np.array(getattr(params, "values", params), dtype=np.float64)
    grad = np.empty_like(base)
    for i in range(base.size):
        up = base.copy()
        dn = base.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (f(up) - f(dn)) / (2.0 * h)
    return grad


def naive_mlp_forward(sizes, flat, x) -> list[float]:
    """Nested-loop forward pass; weight (out x in) row-major then bias, ReLU on hidden layers."""
    a = [float(v) for v in x]
    off = 0
    n_layers = len(sizes) - 1
    for layer in range(n_layers):
        n_in, n_out = int(sizes[layer]), int(sizes[layer + 1])
        z = []
        for r in range(n_out):
            acc = 0.0
            for c in range(n_in):
                acc += float(flat[off + r * n_in + c]) * a[c]
            z.append(acc + float(flat[off + n_out * n_in + r]))
        off += n_out * n_in + n_out
        a = [max(v, 0.0) for v in z] if layer < n_layers - 1 else z
    return a
