"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Inputs are sized like the reference day: 260 flights, 16-slot windows,
112 slots, 100 replications.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from secslot import _kernels_py

try:
    from secslot import _kernels as compiled
except ImportError:
    compiled = None


def inputs(seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(16), size=260)
    alpha = np.clip(rng.normal(0.7, 0.2, size=(260, 16)), 0, 1)
    beta = np.tile(rng.dirichlet(np.ones(16)), (260, 1))
    counts = rng.poisson(450, size=(100, 112)).astype(float)
    cap = np.full(112, 800.0)
    return x, alpha, beta, counts, cap


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)
    x, alpha, beta, counts, cap = inputs()
    cases = {
        "realized_pmf": lambda k: k.realized_pmf(x, alpha, beta, False),
        "point_queue": lambda k: k.point_queue(counts, cap),
    }
    backends = {"python": _kernels_py}
    if compiled is not None:
        backends["cython"] = compiled
    else:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':<14}{'backend':<9}{'best ms':>10}")
    for name, fn in cases.items():
        best = {}
        for label, mod in backends.items():
            t = min(timeit.repeat(lambda: fn(mod), repeat=args.repeat, number=args.number)) / args.number
            best[label] = t
            print(f"{name:<14}{label:<9}{t * 1e3:>10.3f}")
        if len(best) == 2:
            print(f"{'':<14}{'speedup':<9}{best['python'] / best['cython']:>9.1f}x")


if __name__ == "__main__":
    main()
