from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigError
from .mlp import DimensionError, ParamVector


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_num: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **kw)


def optimizer_step(kind: str, params: ParamVector, grad: ParamVector, alpha: float,
                   adam: AdamState | None = None) -> tuple[ParamVector, AdamState | None]:
    """One descent step. Returns new parameters and the new Adam state (None for sgd)."""
    g = grad.values if isinstance(grad, ParamVector) else np.asarray(grad, dtype=np.float64)
    if g.shape != params.values.shape:
        raise DimensionError(f"gradient length {g.size} != parameter length {len(params)}")
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    if kind == "sgd":
        if adam is not None:
            raise ConfigError("sgd takes no Adam state")
        return params.with_values(params.values - alpha * g), None
    if kind != "adam":
        raise ConfigError(f"unknown optimizer {kind!r}")
    if adam is None:
        raise ConfigError("adam requires an AdamState")
    if adam.m.shape != g.shape:
        raise DimensionError("Adam moments do not match parameter length")
    t = adam.step_count + 1
    m = adam.beta1 * adam.m + (1.0 - adam.beta1) * g
    v = adam.beta2 * adam.v + (1.0 - adam.beta2) * (g * g)
    m_hat = m / (1.0 - adam.beta1 ** t)
    v_hat = v / (1.0 - adam.beta2 ** t)
    new = params.values - alpha * m_hat / (np.sqrt(v_hat) + adam.eps_num)
    return params.with_values(new), replace(adam, m=m, v=v, step_count=t)


def polyak_update(target: ParamVector, online: ParamVector, tau: float) -> ParamVector:
    if not 0.0 < tau <= 1.0:
        raise ConfigError(f"tau must lie in (0, 1], got {tau}")
    if len(target) != len(online):
        raise DimensionError("target and online parameter lengths differ")
    if tau == 1.0:
        return online.copy()
    return target.with_values((1.0 - tau) * target.values + tau * online.values)
