"""Compare the compiled and pure-Python tuple classifiers.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case classifies every target tuple whose first coordinate lies in
``[0, rows)``; both backends must return identical arrays.
"""

import argparse
import time

import numpy as np

from kwisesat import kernels
from kwisesat.core import num_types
from kwisesat.independence import _var_masks

CASES = [  # (n, k, rows of the first coordinate)
    (4, 2, None),
    (5, 2, None),
    (6, 3, 4),
    (5, 4, 1),
]


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.compiled_available():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"{'n':>3} {'k':>2} {'tuples':>10} {'compiled s':>11} {'python s':>10} {'speedup':>8}")
    for n, k, rows in CASES:
        M = num_types(n)
        hi = M if rows is None else rows
        masks = _var_masks(n)
        tuples = hi * M ** (k - 1)
        tc, rc = _time(lambda: kernels.classify_tuples(masks, k, M, 1, n, 0, hi, backend="compiled"), args.repeat)
        tp, rp = _time(lambda: kernels.classify_tuples(masks, k, M, 1, n, 0, hi, backend="python"), 1)
        for a, b in zip(rc, rp):
            if not np.array_equal(a, b):
                raise SystemExit(f"backend mismatch at n={n} k={k}")
        print(f"{n:>3} {k:>2} {tuples:>10} {tc:>11.4f} {tp:>10.4f} {tp / tc:>7.0f}x")


if __name__ == "__main__":
    main()
