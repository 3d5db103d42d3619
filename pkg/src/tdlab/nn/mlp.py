"""Dense ReLU networks over a flat parameter vector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend


class DimensionError(ValueError):
    """Input or parameter vector does not match the network layout."""


class NumericError(ArithmeticError):
    """Non-finite activations or gradients."""


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    hidden_activation: str = "relu"
    output_activation: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if min((self.input_dim, self.output_dim) + self.hidden_dims) < 1:
            raise ValueError("layer sizes must be positive")
        if self.hidden_activation != "relu" or self.output_activation != "linear":
            raise ValueError("only relu hidden / linear output layers are supported")

    @property
    def sizes(self) -> np.ndarray:
        return np.array((self.input_dim,) + self.hidden_dims + (self.output_dim,), dtype=np.int64)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        s = self.sizes
        out = []
        for n_in, n_out in zip(s[:-1], s[1:]):
            out.append((int(n_out), int(n_in)))
            out.append((int(n_out), 1))
        return out

    @property
    def param_count(self) -> int:
        s = self.sizes
        return int(sum(a * b + b for a, b in zip(s[:-1], s[1:])))


@dataclass
class ParamVector:
    """Flat float64 parameter store plus the (rows, cols) of each weight/bias block."""

    values: np.ndarray
    shapes: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise DimensionError("parameter values must be a flat vector")
        if not self.shapes:
            self.shapes = [(self.values.size, 1)]
        if sum(r * c for r, c in self.shapes) != self.values.size:
            raise DimensionError(
                f"shapes hold {sum(r * c for r, c in self.shapes)} elements, values has {self.values.size}"
            )

    def __len__(self) -> int:
        return self.values.size

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), list(self.shapes))

    def with_values(self, values) -> "ParamVector":
        return ParamVector(values, list(self.shapes))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def blocks(self) -> list[np.ndarray]:
        """Views of each weight/bias block in layout order."""
        out, off = [], 0
        for r, c in self.shapes:
            out.append(self.values[off:off + r * c].reshape(r, c))
            off += r * c
        return out


def init_params(spec: MlpSpec, rng: np.random.Generator) -> ParamVector:
    """Glorot-uniform weights, zero biases."""
    chunks = []
    for n_out, n_in in spec.shapes[::2]:
        limit = np.sqrt(6.0 / (n_in + n_out))
        chunks.append(rng.uniform(-limit, limit, size=n_out * n_in))
        chunks.append(np.zeros(n_out))
    return ParamVector(np.concatenate(chunks), spec.shapes)


def zero_params(spec: MlpSpec) -> ParamVector:
    return ParamVector(np.zeros(spec.param_count), spec.shapes)


def _check(spec: MlpSpec, params: ParamVector, X: np.ndarray) -> np.ndarray:
    if len(params) != spec.param_count:
        raise DimensionError(f"expected {spec.param_count} parameters, got {len(params)}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise DimensionError(f"expected inputs of width {spec.input_dim}, got shape {X.shape}")
    return X


def mlp_forward_batch(spec: MlpSpec, params: ParamVector, X) -> np.ndarray:
    X = _check(spec, params, X)
    out = backend.forward(params.values, spec.sizes, X)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite network output")
    return out


def mlp_forward(spec: MlpSpec, params: ParamVector, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("mlp_forward takes a single input vector")
    return mlp_forward_batch(spec, params, x)[0]


def mlp_vjp(spec: MlpSpec, params: ParamVector, X, G) -> ParamVector:
    """Sum over rows j of (d output_j / d params)^T G_j."""
    X = _check(spec, params, X)
    G = np.ascontiguousarray(G, dtype=np.float64)
    if G.ndim == 1:
        G = G[None, :]
    if G.shape != (X.shape[0], spec.output_dim):
        raise DimensionError(f"cotangent shape {G.shape} does not match batch/output dims")
    grad = backend.backward(params.values, spec.sizes, X, G)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient")
    return ParamVector(grad, spec.shapes)


def mlp_gradient(spec: MlpSpec, params: ParamVector, x, output_index: int) -> ParamVector:
    if not 0 <= output_index < spec.output_dim:
        raise DimensionError(f"output_index {output_index} out of range")
    out = mlp_forward(spec, params, x)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite activations")
    g = np.zeros((1, spec.output_dim))
    g[0, output_index] = 1.0
    return mlp_vjp(spec, params, x, g)
