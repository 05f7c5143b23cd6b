"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so one process covers both. Each
timing is the best of ``--repeat`` runs; the largest difference between
backends is printed alongside (relative for the Laguerre values,
absolute for log normalizers).
"""
import argparse
import time

import numpy as np

from divsel import _pykernels, gauss_laguerre_rule

try:
    from divsel import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled kernels are not built; reinstall with Cython and a C compiler")

    rows = []
    z = np.linspace(0.01, 100.0, 2000)
    for n in (100, 1000, 5000):
        tc, a = best_of(lambda: _kernels.laguerre_diff(n, z), args.repeat)
        tp, b = best_of(lambda: _pykernels.laguerre_diff(n, z), args.repeat)
        # Laguerre values grow fast in z, so compare relatively
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)) / np.maximum(np.abs(np.asarray(y)), 1.0)))
                   for x, y in zip(a, b))
        rows.append((f"laguerre_diff n={n}, 2000 points", tc, tp, diff))

    rule = gauss_laguerre_rule(5000)
    psi = np.geomspace(1e-6, 1e4, 64)
    for beta in (-2.0, 0.0, 0.5, 2.0):
        a = (beta - 1) / 2
        tc, fast = best_of(lambda: _kernels.reduced_log_normalizer(beta, a, psi, rule.nodes, rule.log_weights), args.repeat)
        tp, slow = best_of(lambda: _pykernels.reduced_log_normalizer(beta, a, psi, rule.nodes, rule.log_weights), args.repeat)
        diff = float(np.max(np.abs(np.asarray(fast) - np.asarray(slow))))
        rows.append((f"log normalizer beta={beta:g}, 64 psi, order 5000", tc, tp, diff))

    print(f"{'kernel':<48} {'compiled':>10} {'numpy':>10} {'speedup':>8} {'max diff':>9}")
    for name, tc, tp, diff in rows:
        print(f"{name:<48} {tc * 1e3:>8.2f}ms {tp * 1e3:>8.2f}ms {tp / tc:>7.1f}x {diff:>9.1e}")


if __name__ == "__main__":
    main()
