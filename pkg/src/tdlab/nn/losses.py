from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def smooth_l1(x, lam: float = 1.0):
    """Quadratic x^2/(2 lam) inside |x| <= lam, |x| - lam/2 outside."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    out = np.where(ax <= lam, x * x / (2.0 * lam), ax - 0.5 * lam)
    return out[()] if out.ndim == 0 else out


def smooth_l1_grad(x, lam: float = 1.0):
    if lam <= 0:
        raise ValueError("lambda must be positive")
    x = np.asarray(x, dtype=np.float64)
    out = np.where(np.abs(x) <= lam, x / lam, np.sign(x))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class LossSpec:
    kind: str = "smooth_l1"
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("mean_square_value", "smooth_l1"):
            raise ValueError(f"unknown loss {self.kind!r}")
        if self.kind == "smooth_l1" and self.lam <= 0:
            raise ValueError("smooth_l1 needs lambda > 0")

    def value(self, td):
        if self.kind == "smooth_l1":
            return smooth_l1(td, self.lam)
        td = np.asarray(td, dtype=np.float64)
        return 0.5 * td * td

    def derivative(self, td):
        """d loss / d td."""
        if self.kind == "smooth_l1":
            return smooth_l1_grad(td, self.lam)
        return np.asarray(td, dtype=np.float64)
