"""Uniform experience replay."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import NotReadyError


@dataclass(frozen=True)
class Transition:
    state: Any
    action: Any
    reward: float
    next_state: Any
    terminal: bool = False


class ReplayBuffer:
    def __init__(self, capacity: int = 100_000, min_size: int = 100):
        if capacity < 1 or min_size < 1:
            raise ValueError("capacity and min_size must be positive")
        self.capacity = capacity
        self.min_size = min_size
        self.storage: list[Transition | None] = [None] * capacity
        self.write_cursor = 0
        self.count = 0

    def __len__(self) -> int:
        return self.count

    def push(self, transition: Transition) -> "ReplayBuffer":
        # stored copies never alias arrays the caller keeps mutating
        self.storage[self.write_cursor] = copy.deepcopy(transition)
        self.write_cursor = (self.write_cursor + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)
        return self

    def ready(self, batch_size: int = 1) -> bool:
        # sampling is with replacement, so only min_size gates it; batch_size is kept for call-site symmetry
        return self.count >= self.min_size

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform with replacement over stored entries."""
        if not self.ready(batch_size):
            raise NotReadyError(f"{self.count} stored, need {self.min_size}")
        idx = rng.integers(0, self.count, size=batch_size)
        return [copy.deepcopy(self.storage[i]) for i in idx]

    def contents(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        if self.count < self.capacity:
            return list(self.storage[: self.count])
        return self.storage[self.write_cursor:] + self.storage[: self.write_cursor]
