"""Command line: ``tdlab run | check | sweep``.

Exit codes: 0 success, 2 configuration error, 3 failed acceptance check.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys

from ..errors import ConfigError
from .config import apply_overrides, load_config, parse_config, parse_grid, resolve_output_dir

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def _seeds(raw: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in raw.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --seeds value {raw!r}") from exc
    if not seeds:
        raise ConfigError("--seeds is empty")
    return seeds


def cmd_run(args) -> int:
    from .emit import emit
    from .runner import run_experiment

    cfg = load_config(args.config)
    if args.seeds:
        cfg = cfg.replace(seeds=_seeds(args.seeds))
    out = resolve_output_dir(cfg, args.out)
    results = run_experiment(cfg, jobs=args.jobs)
    for path in emit(results, out, cfg.experiment, cfg.metric_window):
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .emit import emit
    from .runner import run_experiment

    try:
        with open(args.config, encoding="utf-8") as fh:
            base = fh.read()
        with open(args.grid, encoding="utf-8") as fh:
            grid = parse_grid(fh.read())
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    keys = sorted(grid)
    combos = list(itertools.product(*(grid[k] for k in keys)))
    # validate every point before running any of them
    configs = []
    for combo in combos:
        overrides = dict(zip(keys, combo))
        cfg = parse_config(apply_overrides(base, overrides))
        if args.seeds:
            cfg = cfg.replace(seeds=_seeds(args.seeds))
        tag = "__".join(f"{k.split('.', 1)[1]}={v}" for k, v in overrides.items())
        configs.append((tag, cfg))
    root = resolve_output_dir(configs[0][1], args.out) if configs else "."
    for tag, cfg in configs:
        results = run_experiment(cfg, jobs=args.jobs)
        for path in emit(results, os.path.join(root, tag), cfg.experiment, cfg.metric_window):
            print(path)
    return EXIT_OK


def cmd_check(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config over its seeds")
    run.add_argument("--config", required=True)
    run.add_argument("--seeds", help="comma-separated seeds, overrides the config")
    run.add_argument("--out", help="output directory (else $TDLAB_OUTPUT_DIR, else the config)")
    run.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check", help="run the acceptance checks")
    chk.add_argument("--quick", action="store_true", help="shorter desk-scale runs")
    chk.set_defaults(func=cmd_check)

    sw = sub.add_parser("sweep", help="run a config over a grid of overrides")
    sw.add_argument("--config", required=True)
    sw.add_argument("--grid", required=True)
    sw.add_argument("--seeds")
    sw.add_argument("--out")
    sw.add_argument("--jobs", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
