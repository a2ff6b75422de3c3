"""Compare the compiled kernels against the pure-python fallback.

Runs each kernel on a few problem sizes with both backends and prints
best-of-N wall times plus the speedup. Useful after touching either
implementation or when deciding whether a platform needs the extension
at all.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]
"""

import argparse
import time

import numpy as np

from driftxplain._kernels import _pykernels

try:
    from driftxplain._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    fn()  # warm-up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(quick):
    rng = np.random.default_rng(0)
    scale = 1 if quick else 2
    for n in (400 * scale, 1200 * scale):
        a = rng.normal(size=(n // 4, 8))
        b = rng.normal(size=(n, 8))
        yield f"pairwise_sqdist {n // 4}x{n}", "pairwise_sqdist", (a, b)
    for n in (60 * scale, 150 * scale):
        cost = rng.uniform(0.0, 10.0, size=(n, n + 20))
        yield f"lsap_solve {n}x{n + 20}", "lsap_solve", (cost,)
    for n in (80 * scale, 160 * scale):
        pts = rng.normal(size=(n, 2))
        d2 = _pykernels.pairwise_sqdist(pts, pts)
        s = -d2
        off = s[~np.eye(n, dtype=bool)]
        np.fill_diagonal(s, np.median(off))
        yield f"ap_run n={n}", "ap_run", (s, 0.7, 300, 20)
    for n in (150 * scale, 400 * scale):
        pts = rng.normal(size=(n, 3))
        yield f"mean_shift_run n={n}", "mean_shift_run", (pts, 1.0, 1e-4, 300)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timed runs per case")
    parser.add_argument("--quick", action="store_true", help="halve the problem sizes")
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled backend not built; timing the python fallback only\n")

    header = f"{'workload':<28} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, name, kernel_args in workloads(args.quick):
        t_py = best_of(lambda: getattr(_pykernels, name)(*kernel_args), args.repeat)
        if _ckernels is None:
            print(f"{label:<28} {t_py * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
            continue
        t_c = best_of(lambda: getattr(_ckernels, name)(*kernel_args), args.repeat)
        print(f"{label:<28} {t_py * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
