"""State-action feature encoders: one-hot and tile coding, in sparse form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FeatureVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be matching 1-D arrays")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError("indices must be strictly increasing and inside [0, dim)")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def trusted(cls, indices: np.ndarray, values: np.ndarray, dim: int) -> "FeatureVector":
        """Build without validation; for encoders whose output is correct by construction."""
        fv = object.__new__(cls)
        object.__setattr__(fv, "indices", indices)
        object.__setattr__(fv, "values", values)
        object.__setattr__(fv, "dim", dim)
        return fv

    def dot(self, w: np.ndarray) -> float:
        return float(np.dot(w[self.indices], self.values))

    def inner(self, other: "FeatureVector") -> float:
        common, i, j = np.intersect1d(self.indices, other.indices, assume_unique=True, return_indices=True)
        return float(np.dot(self.values[i], other.values[j]))

    def sq_norm(self) -> float:
        return float(np.dot(self.values, self.values))

    def dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


def one_hot_encode(state_id: int, action_id: int, num_states: int, num_actions: int) -> FeatureVector:
    if not (0 <= state_id < num_states and 0 <= action_id < num_actions):
        raise IndexError(f"(state {state_id}, action {action_id}) outside {num_states}x{num_actions}")
    return FeatureVector(np.array([state_id * num_actions + action_id]), np.ones(1), num_states * num_actions)


@dataclass(frozen=True)
class TileCodingSpec:
    num_tilings: int
    tiles_per_dim: int
    state_low: tuple[float, ...]
    state_high: tuple[float, ...]
    num_actions: int = 1
    normalize: bool = False

    def __post_init__(self):
        low = tuple(float(v) for v in self.state_low)
        high = tuple(float(v) for v in self.state_high)
        object.__setattr__(self, "state_low", low)
        object.__setattr__(self, "state_high", high)
        if len(low) != len(high) or not low:
            raise ValueError("state bounds must be non-empty and of equal length")
        if any(lo >= hi for lo, hi in zip(low, high)):
            raise ValueError("state_low must be < state_high in every dimension")
        if min(self.num_tilings, self.tiles_per_dim, self.num_actions) < 1:
            raise ValueError("tiling counts and num_actions must be positive")

    @property
    def state_dim(self) -> int:
        return len(self.state_low)

    @property
    def tiles_per_tiling(self) -> int:
        # one extra tile per dimension absorbs the offset shift
        return (self.tiles_per_dim + 1) ** self.state_dim

    @property
    def block_size(self) -> int:
        return self.num_tilings * self.tiles_per_tiling

    @property
    def dim(self) -> int:
        return self.num_actions * self.block_size

    @property
    def tile_width(self) -> np.ndarray:
        return (np.array(self.state_high) - np.array(self.state_low)) / self.tiles_per_dim


def active_tiles(spec: TileCodingSpec, state) -> np.ndarray:
    """Active tile index (within the action block) for each tiling, in tiling order."""
    low = np.array(spec.state_low)
    high = np.array(spec.state_high)
    s = np.clip(np.asarray(state, dtype=np.float64), low, high)
    if s.shape != low.shape:
        raise ValueError(f"state has shape {s.shape}, expected {low.shape}")
    scaled = (s - low) / spec.tile_width  # in tile units, [0, tiles_per_dim]
    offsets = np.arange(spec.num_tilings)[:, None] / spec.num_tilings
    coords = np.floor(scaled[None, :] + offsets).astype(np.int64)
    np.clip(coords, 0, spec.tiles_per_dim, out=coords)
    radix = (spec.tiles_per_dim + 1) ** np.arange(spec.state_dim)
    return np.arange(spec.num_tilings) * spec.tiles_per_tiling + coords @ radix


def tile_encode(spec: TileCodingSpec, state, action_id: int) -> FeatureVector:
    """Tile-code ``state`` for ``action_id``; states outside the bounds are clipped."""
    if not 0 <= action_id < spec.num_actions:
        raise IndexError(f"action {action_id} outside [0, {spec.num_actions})")
    idx = action_id * spec.block_size + active_tiles(spec, state)
    value = 1.0 / np.sqrt(spec.num_tilings) if spec.normalize else 1.0
    return FeatureVector(idx, np.full(spec.num_tilings, value), spec.dim)


class TileEncoder:
    """Callable ``(state, action) -> FeatureVector`` with precomputed geometry.

    Produces the same vectors as :func:`tile_encode`. A state is usually encoded
    several times per update (once per action and again for the gradient), so
    the active tiles of recently seen states are memoized.
    """

    def __init__(self, spec: TileCodingSpec, cache_size: int = 4096):
        self.spec = spec
        self._low = np.array(spec.state_low)
        self._high = np.array(spec.state_high)
        self._width = spec.tile_width
        self._offsets = (np.arange(spec.num_tilings) / spec.num_tilings)[:, None]
        self._radix = (spec.tiles_per_dim + 1) ** np.arange(spec.state_dim)
        self._base = np.arange(spec.num_tilings) * spec.tiles_per_tiling
        value = 1.0 / np.sqrt(spec.num_tilings) if spec.normalize else 1.0
        self._values = np.full(spec.num_tilings, value)
        self._cache: dict = {}
        self._cache_size = cache_size

    def _tiles(self, state) -> np.ndarray:
        s = np.asarray(state, dtype=np.float64)
        key = s.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if s.shape != self._low.shape:
            raise ValueError(f"state has shape {s.shape}, expected {self._low.shape}")
        scaled = (np.minimum(np.maximum(s, self._low), self._high) - self._low) / self._width
        coords = np.floor(scaled[None, :] + self._offsets).astype(np.int64)
        np.clip(coords, 0, self.spec.tiles_per_dim, out=coords)
        tiles = self._base + coords @ self._radix
        if len(self._cache) >= self._cache_size:
            self._cache.clear()
        self._cache[key] = tiles
        return tiles

    def __call__(self, state, action_id: int) -> FeatureVector:
        if not 0 <= action_id < self.spec.num_actions:
            raise IndexError(f"action {action_id} outside [0, {self.spec.num_actions})")
        idx = action_id * self.spec.block_size + self._tiles(state)
        return FeatureVector.trusted(idx, self._values, self.spec.dim)


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over a box, used to give continuous states a tabular id."""

    bins: int
    state_low: tuple[float, ...]
    state_high: tuple[float, ...]

    @property
    def num_cells(self) -> int:
        return self.bins ** len(self.state_low)

    def cell(self, state) -> int:
        low = np.array(self.state_low)
        high = np.array(self.state_high)
        s = np.clip(np.asarray(state, dtype=np.float64), low, high)
        k = np.floor((s - low) / (high - low) * self.bins).astype(np.int64)
        np.clip(k, 0, self.bins - 1, out=k)
        return int(k @ (self.bins ** np.arange(len(low))))
