from __future__ import annotations

import numpy as np
from scipy import stats


def rolling_stats(series, window: int) -> np.ndarray:
    """Trailing-window mean; the first window-1 entries average the available prefix."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    if window == 1:
        return x.copy()
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def confidence_interval(values_per_seed, level: float = 0.95):
    """Per-column mean and t-based half width over the rows (one row per seed).

    Returns (mean, half_width, degenerate); with a single seed the half width is
    zero and ``degenerate`` is True.
    """
    v = np.atleast_2d(np.asarray(values_per_seed, dtype=np.float64))
    n = v.shape[0]
    mean = v.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean), True
    stderr = v.std(axis=0, ddof=1) / np.sqrt(n)
    t = stats.t.ppf(0.5 + level / 2.0, n - 1)
    return mean, t * stderr, False
