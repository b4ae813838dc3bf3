"""Compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the median wall time of each kernel on both backends, the speed-up,
and the largest difference between their outputs.
"""

import argparse
import statistics
import time

import numpy as np

from ecgarrhythmia import kernels
from ecgarrhythmia.classify import ForestParams, train_forest
from ecgarrhythmia.domain import LABELS, Dataset


def _time(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def _cases(rng):
    hr = 70 + 5 * rng.standard_normal(500)
    coeffs = rng.standard_normal(512)
    n = 2000
    X = np.ascontiguousarray(rng.standard_normal((n, 66)))
    y = rng.integers(0, 9, n).astype(np.intp)
    idx = np.arange(n, dtype=np.intp)
    feats = rng.permutation(66).astype(np.intp)
    r = 0.2 * hr.std()
    return [
        ("ApEn  n=500", lambda b: b.approx_entropy(hr, 2, r)),
        ("ApEn  n=512 (D-level)", lambda b: b.approx_entropy(coeffs, 2, 0.2 * coeffs.std())),
        ("SampEn n=500", lambda b: b.sample_entropy_counts(hr, 2, r)),
        ("best_split n=2000 F=66", lambda b: b.best_split(X, y, idx, feats, 9, 9, 1)),
    ]


def _forest_data(rng):
    X = np.vstack([rng.normal(i % 3, 1.0, (100, 48)) for i in range(9)])
    labels = [lab for lab in LABELS for _ in range(100)]
    return Dataset(X, labels, "time48")


def _forest(ds):
    return _time(lambda: train_forest(ds, ForestParams(n_trees=50, seed=1)), 1)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled is None:
        print("compiled extension not built; only the fallback is available")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':26s} {'cython':>10s} {'numpy':>10s} {'speed-up':>9s} {'max diff':>10s}")
    for name, fn in _cases(rng):
        tc, oc = _time(lambda: fn(kernels.compiled), args.repeat)
        tf, of = _time(lambda: fn(kernels.fallback), args.repeat)
        diff = float(np.max(np.abs(np.subtract(np.asarray(oc, float), np.asarray(of, float)))))
        print(f"{name:26s} {tc * 1e3:8.2f}ms {tf * 1e3:8.2f}ms {tf / tc:8.1f}x {diff:10.2e}")

    # whole-forest training through the selected backend
    ds = _forest_data(rng)
    saved = kernels.best_split
    t_c = _forest(ds)
    kernels.best_split = kernels.fallback.best_split
    try:
        t_f = _forest(ds)
    finally:
        kernels.best_split = saved
    print(f"{'forest 50 trees, 900x48':26s} {t_c * 1e3:8.1f}ms {t_f * 1e3:8.1f}ms {t_f / t_c:8.1f}x")


if __name__ == "__main__":
    main()
