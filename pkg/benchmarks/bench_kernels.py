"""Compare the compiled MLP kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 2000] [--batch 1 32]

Times forward and backward for the pendulum value network (3 -> 32 -> 32 -> 3)
and checks that both backends agree to round-off.
"""

import argparse
import timeit

import numpy as np

from tdlab.nn import MlpSpec, init_params
from tdlab.nn import _kernels_py

try:
    from tdlab.nn import _kernels as _compiled
except ImportError:
    _compiled = None


def bench(mod, values, sizes, X, G, repeats):
    fwd = min(timeit.repeat(lambda: mod.forward(values, sizes, X), number=repeats, repeat=3)) / repeats
    bwd = min(timeit.repeat(lambda: mod.backward(values, sizes, X, G), number=repeats, repeat=3)) / repeats
    return fwd, bwd


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeats", type=int, default=2000)
    p.add_argument("--batch", type=int, nargs="+", default=[1, 32])
    p.add_argument("--hidden", type=int, nargs="+", default=[32, 32])
    args = p.parse_args(argv)

    if _compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    spec = MlpSpec(3, tuple(args.hidden), 3)
    values = init_params(spec, rng).values
    sizes = spec.sizes
    print(f"network {sizes.tolist()}, {values.size} parameters, best of 3 x {args.repeats} calls")
    print(f"{'batch':>5} {'op':>8} {'python us':>10} {'compiled us':>12} {'speedup':>8} {'max diff':>9}")
    for B in args.batch:
        X = rng.normal(size=(B, 3))
        G = rng.normal(size=(B, 3))
        py = bench(_kernels_py, values, sizes, X, G, args.repeats)
        cy = bench(_compiled, values, sizes, X, G, args.repeats)
        diffs = (np.max(np.abs(_kernels_py.forward(values, sizes, X) - _compiled.forward(values, sizes, X))),
                 np.max(np.abs(_kernels_py.backward(values, sizes, X, G) - _compiled.backward(values, sizes, X, G))))
        for op, tp, tc, d in zip(("forward", "backward"), py, cy, diffs):
            print(f"{B:>5} {op:>8} {tp * 1e6:>10.2f} {tc * 1e6:>12.2f} {tp / tc:>7.1f}x {d:>9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
