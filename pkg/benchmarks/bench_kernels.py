"""Time the compiled kernels against the numpy reference backend.

Run with ``python3 benchmarks/bench_kernels.py``; prints one row per kernel
with the median wall time of each backend and the speedup.
"""
import argparse
import statistics
import time

import numpy as np

from caradory.kernels import available_backends


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _cases(rng, n, m):
    V = np.ascontiguousarray(rng.standard_normal((m, n)))
    g = rng.standard_normal(n)
    x = rng.standard_normal(n)
    k = 12
    A = np.ascontiguousarray(V[:k])
    target = A.T @ rng.dirichlet(np.ones(k))
    w0 = np.zeros(k)
    w0[0] = 1.0
    return {
        "nep_argmin": lambda mod: mod.nep_argmin(V, g, x, 0.5),
        "simplex_correction p=2": lambda mod: mod.simplex_correction(A, target, 2.0, w0.copy(), 1e-12, 20_000),
        "simplex_correction p=3": lambda mod: mod.simplex_correction(A, target, 3.0, w0.copy(), 1e-12, 2_000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--m", type=int, default=501)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the reference backend is available")
    cases = _cases(np.random.default_rng(args.seed), args.n, args.m)
    names = sorted(backends)
    print(f"{'kernel':<28}" + "".join(f"{b:>14}" for b in names) + ("    speedup" if len(names) > 1 else ""))
    for label, call in cases.items():
        row = {b: _median_time(lambda: call(backends[b]), args.repeats) for b in names}
        line = f"{label:<28}" + "".join(f"{row[b] * 1e3:>12.3f}ms" for b in names)
        if len(names) > 1:
            line += f"  {row['python'] / row['cython']:>8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
