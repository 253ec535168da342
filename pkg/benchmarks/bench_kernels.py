"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs each hot kernel (knn_vote, softmax_xent, mean_pairwise) on a range of
sizes with both backends and reports wall-clock times plus the speedup of the
compiled path. Also cross-checks that the two backends agree on every
decision before timing anything, so a broken build fails loudly rather than
posting numbers.

Usage:
    python benchmarks/bench_kernels.py [--repeats 5] [--seed 0]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from groupsched.kernels import _numpy

try:
    from groupsched.kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def check_agreement(rng) -> None:
    queries = rng.normal(size=(64, 16))
    refs = rng.normal(size=(128, 16))
    codes = rng.integers(0, 6, size=128).astype(np.int64)
    got = _core.knn_vote(queries, refs, codes, 8)
    want = _numpy.knn_vote(queries, refs, codes, 8)
    if not np.array_equal(got, want):
        raise SystemExit("backends disagree on knn_vote; refusing to benchmark")

    X = rng.normal(size=(64, 16))
    y = rng.integers(0, 4, size=64).astype(np.int64)
    W = rng.normal(size=(4, 16))
    b = rng.normal(size=4)
    loss_c, dW_c, db_c = _core.softmax_xent(X, y, W, b)
    loss_n, dW_n, db_n = _numpy.softmax_xent(X, y, W, b)
    if abs(loss_c - loss_n) > 1e-9 or not np.allclose(dW_c, dW_n, atol=1e-9):
        raise SystemExit("backends disagree on softmax_xent; refusing to benchmark")

    for metric in (_numpy.METRIC_EUCLIDEAN, _numpy.METRIC_COSINE):
        a = _core.mean_pairwise(X, metric)
        c = _numpy.mean_pairwise(X, metric)
        if abs(a - c) > 1e-9:
            raise SystemExit("backends disagree on mean_pairwise; refusing to benchmark")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timings per case; best-of is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _core is None:
        print("compiled extension not available; nothing to compare "
              "(build it with `pip install -e .`)", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    check_agreement(rng)

    cases = []
    for nq, nr, dim, k in [(200, 50, 16, 8), (2000, 200, 64, 8), (5000, 500, 128, 8)]:
        queries = rng.normal(size=(nq, dim))
        refs = rng.normal(size=(nr, dim))
        codes = rng.integers(0, 10, size=nr).astype(np.int64)
        cases.append((
            f"knn_vote      {nq}x{dim}, {nr} refs, k={k}",
            lambda q=queries, r=refs, c=codes: _core.knn_vote(q, r, c, k),
            lambda q=queries, r=refs, c=codes: _numpy.knn_vote(q, r, c, k),
        ))
    for n, dim, classes in [(32, 8, 4), (256, 64, 10), (1024, 256, 20)]:
        X = rng.normal(size=(n, dim))
        y = rng.integers(0, classes, size=n).astype(np.int64)
        W = rng.normal(size=(classes, dim))
        b = rng.normal(size=classes)
        cases.append((
            f"softmax_xent  {n}x{dim}, C={classes}",
            lambda X=X, y=y, W=W, b=b: _core.softmax_xent(X, y, W, b),
            lambda X=X, y=y, W=W, b=b: _numpy.softmax_xent(X, y, W, b),
        ))
    for n, dim in [(100, 16), (500, 64), (1500, 128)]:
        X = rng.normal(size=(n, dim))
        cases.append((
            f"mean_pairwise {n}x{dim}, euclidean",
            lambda X=X: _core.mean_pairwise(X, _numpy.METRIC_EUCLIDEAN),
            lambda X=X: _numpy.mean_pairwise(X, _numpy.METRIC_EUCLIDEAN),
        ))

    width = max(len(name) for name, _, _ in cases)
    print(f"{'case':<{width}}  {'native':>10}  {'python':>10}  {'speedup':>8}")
    for name, native_fn, python_fn in cases:
        t_native = best_of(native_fn, args.repeats)
        t_python = best_of(python_fn, args.repeats)
        print(f"{name:<{width}}  {t_native * 1e3:>8.2f}ms  {t_python * 1e3:>8.2f}ms"
              f"  {t_python / t_native:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
