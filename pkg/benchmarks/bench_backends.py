"""Compare the compiled kernels against the pure-NumPy fallbacks.

Covers the two hot paths: the pairwise shift-cost tensor (dominates Gram
assembly) and the SMO solver (dominates hyperparameter search).  Run as:

    python benchmarks/bench_backends.py [--n 200] [--repeats 5]
"""

import argparse
import time

import numpy as np

from cyltouch import kernels, svm
from cyltouch.featurize import featurize_dataset
from cyltouch.kernels import KernelSpec, gram, pairwise_shift_costs
from cyltouch.simgen import GeneratorConfig, generate
from cyltouch.svm import smo_solve


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200, help="dataset size")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if "compiled" not in kernels.available_backends():
        print("compiled backend not built; nothing to compare "
              "(reinstall without CYLTOUCH_SKIP_EXT)")
        return

    per_class = max(1, args.n // 5)
    feat = featurize_dataset(generate(GeneratorConfig(
        samples_per_class=per_class, seed=0)))
    X = feat.feature_array()
    n = X.shape[0]
    print(f"dataset: {n} feature maps of shape {X.shape[1:]}  "
          f"(best of {args.repeats})\n")

    rows = []
    for backend in ("numpy", "compiled"):
        t = best_of(lambda b=backend: pairwise_shift_costs(X, backend=b),
                    args.repeats)
        rows.append(("shift-cost tensor", backend, t))
    spec = KernelSpec("cylindrical", 1.0, 4.0)
    for backend in ("numpy", "compiled"):
        t = best_of(lambda b=backend: gram(spec, X, backend=b), args.repeats)
        rows.append(("full gram", backend, t))

    K = gram(spec, X).entries
    y = np.where(feat.labels() % 2 == 0, 1.0, -1.0)
    for backend in ("numpy", "compiled"):
        t = best_of(lambda b=backend: smo_solve(K, y, 10.0, seed=0, backend=b),
                    args.repeats)
        rows.append((f"smo solve ({n} pts)", backend, t))

    width = max(len(r[0]) for r in rows)
    by_op = {}
    for op, backend, t in rows:
        by_op.setdefault(op, {})[backend] = t
    print(f"{'operation':<{width}}  {'numpy':>10}  {'compiled':>10}  {'speedup':>8}")
    for op, t in by_op.items():
        speedup = t["numpy"] / t["compiled"]
        print(f"{op:<{width}}  {t['numpy'] * 1e3:>8.2f}ms  "
              f"{t['compiled'] * 1e3:>8.2f}ms  {speedup:>7.1f}x")

    # sanity: both backends produce the same numbers
    a = pairwise_shift_costs(X[:50], backend="numpy")
    b = pairwise_shift_costs(X[:50], backend="compiled")
    print(f"\nmax |numpy - compiled| over the cost tensor: "
          f"{float(np.max(np.abs(a - b))):.2e}")


if __name__ == "__main__":
    main()
