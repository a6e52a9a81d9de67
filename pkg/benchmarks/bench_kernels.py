"""Time the numba and numpy variants of each hot kernel.

Both variants live side by side in :mod:`wsbmpl.kernels`, so one process can
time them without toggling ``WSBMPL_DISABLE_NUMBA``.  Numba variants are
called once before timing so compilation is excluded.

Run: python benchmarks/bench_kernels.py [--n 1000 --k 5 --repeat 5]
"""
import argparse
import time

import numpy as np

from wsbmpl import kernels
from wsbmpl._accel import HAS_NUMBA


def best_time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n, k, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    W = np.triu(A, 1)
    W = W + W.T
    z = rng.integers(0, k, n).astype(np.int64)
    s = rng.normal(size=(n, k))
    tau = rng.dirichlet(np.ones(k), n)
    means = rng.normal(size=(k, k))
    means = (means + means.T) / 2
    log_pi = np.log(np.full(k, 1.0 / k))
    lam = rng.uniform(0.5, 2.0, (k, k))
    X = rng.normal(size=(n, k))
    return {
        "component_loglik": (s, log_pi, means, lam),
        "weighted_moments": (s, tau),
        "pair_block_sums": (W, z, k),
        "pair_block_sqdev": (W, z, means),
        "nearest_center": (X, X[:k].copy()),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print(f"n={args.n} k={args.k} repeat={args.repeat} (best of)")
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, inputs in cases(args.n, args.k, args.seed).items():
        t_np = best_time(getattr(kernels, f"{name}_np"), inputs, args.repeat)
        if HAS_NUMBA:
            fn = getattr(kernels, f"{name}_nb")
            fn(*inputs)  # compile
            t_nb = best_time(fn, inputs, args.repeat)
            print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<20}{1e3 * t_np:>12.3f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
