"""Minimal dense-network engine: forward, reverse-mode gradients, optimizers."""

from . import backend
from .losses import LossSpec, smooth_l1, smooth_l1_grad
from .mlp import (
    DimensionError,
    MlpSpec,
    NumericError,
    ParamVector,
    init_params,
    mlp_forward,
    mlp_forward_batch,
    mlp_gradient,
    mlp_vjp,
    zero_params,
)
from .optim import AdamState, ConfigError, optimizer_step, polyak_update

__all__ = [
    "AdamState",
    "ConfigError",
    "DimensionError",
    "LossSpec",
    "MlpSpec",
    "NumericError",
    "ParamVector",
    "backend",
    "init_params",
    "mlp_forward",
    "mlp_forward_batch",
    "mlp_gradient",
    "mlp_vjp",
    "optimizer_step",
    "polyak_update",
    "smooth_l1",
    "smooth_l1_grad",
    "zero_params",
]
