"""CSV / SVG / JSON writers for run metrics."""

from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

from .runner import RunMetrics
from .stats import confidence_interval, rolling_stats

HEADER = "step,delta_e_mean,delta_i_mean,abs_gap,r_bar,episode_return,seed"


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def to_csv(runs: list[RunMetrics]) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for m in runs:
        cols = [m.step, m.delta_e_mean, m.delta_i_mean, m.abs_gap, m.r_bar, m.episode_return]
        for row in zip(*cols):
            buf.write(",".join(_fmt(v) for v in row) + "," + str(m.seed) + "\n")
    return buf.getvalue()


def parse_csv(text: str) -> list[RunMetrics]:
    lines = text.split("\n")
    if lines[0] != HEADER:
        raise ValueError(f"unexpected header {lines[0]!r}")
    runs: dict[int, RunMetrics] = {}
    for row in csv.reader(lines[1:]):
        if not row:
            continue
        seed = int(row[6])
        m = runs.setdefault(seed, RunMetrics(seed))
        m.step.append(int(row[0]))
        for name, raw in zip(RunMetrics.COLUMNS[1:], row[1:6]):
            getattr(m, name).append(float(raw) if raw else float("nan"))
    return list(runs.values())


def aligned(runs: list[RunMetrics], column: str) -> np.ndarray:
    """Seeds x entries matrix of a column's recorded values, truncated to the shortest seed."""
    series = [m.present(column) for m in runs]
    n = min(len(s) for s in series)
    return np.array([s[:n] for s in series])


def to_svg(runs: list[RunMetrics], column: str, window: int = 500, width: int = 640, height: int = 360) -> str:
    """Line chart of the rolling mean of ``column`` across seeds with a 95% CI band."""
    data = aligned(runs, column)
    title = f"{runs[0].label or 'run'}: rolling {column}"
    if data.shape[1] == 0:
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
                f'<text x="10" y="20">{title}: no data</text></svg>\n')
    rolled = np.array([rolling_stats(row, window) for row in data])
    mean, half, _ = confidence_interval(rolled)
    lo, hi = mean - half, mean + half
    pad = 40
    ymin, ymax = float(np.min(lo)), float(np.max(hi))
    if ymax == ymin:
        ymax = ymin + 1.0
    n = mean.size

    def xy(i, v):
        x = pad + (width - 2 * pad) * (i / max(n - 1, 1))
        y = height - pad - (height - 2 * pad) * ((v - ymin) / (ymax - ymin))
        return f"{x:.2f},{y:.2f}"

    idx = np.unique(np.linspace(0, n - 1, min(n, 800)).astype(int))
    line = " ".join(xy(i, mean[i]) for i in idx)
    band = " ".join([xy(i, hi[i]) for i in idx] + [xy(i, lo[i]) for i in idx[::-1]])
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<text x="{pad}" y="20" font-size="12">{title} (n={len(runs)} seeds)</text>\n'
        f'<polygon points="{band}" fill="steelblue" fill-opacity="0.25" stroke="none"/>\n'
        f'<polyline points="{line}" fill="none" stroke="steelblue" stroke-width="1.5"/>\n'
        f'<text x="2" y="{pad}" font-size="10">{ymax:.3g}</text>\n'
        f'<text x="2" y="{height - pad}" font-size="10">{ymin:.3g}</text>\n'
        f'</svg>\n'
    )


def summary(runs: list[RunMetrics]) -> dict:
    out = {"seeds": []}
    for m in runs:
        gap = m.present("abs_gap")
        entry = {
            "seed": m.seed,
            "updates": int(gap.size),
            "mean_abs_gap": float(gap.mean()) if gap.size else None,
            "final_r_bar": float(m.r_bar[-1]) if m.r_bar and not math.isnan(m.r_bar[-1]) else None,
            "r_bar0": m.r_bar0,
            "sign_agreement_rate": m.sign_agreement_rate,
        }
        if m.epsilon_sum and not math.isnan(m.epsilon_sum[-1]):
            entry["ledger_implicit_sum"] = m.implicit_sum[-1]
            entry["ledger_epsilon_sum"] = m.epsilon_sum[-1]
        out["seeds"].append(entry)
    return out


def default_column(experiment: str) -> str:
    return {"td_divergence": "abs_gap", "avg_reward_estimate": "r_bar", "performance": "episode_return"}[experiment]


def emit(results: dict[str, list[RunMetrics]], out_dir: str, experiment: str, window: int = 500,
         formats=("csv", "svg_lines")) -> list[str]:
    """Write one CSV (all seeds), one SVG and one JSON summary per label. Returns written paths."""
    if not results:
        raise ValueError("no metrics to emit")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for label, runs in sorted(results.items()):
        if "csv" in formats:
            path = os.path.join(out_dir, label + ".csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(to_csv(runs))
            written.append(path)
        if "svg_lines" in formats:
            path = os.path.join(out_dir, label + ".svg")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(to_svg(runs, default_column(experiment), window))
            written.append(path)
        path = os.path.join(out_dir, label + ".summary.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summary(runs), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
