"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--problems 100000] [--units 32]
"""

import argparse
import time

import numpy as np

from ttsplateau.kernels import _ref

try:
    from ttsplateau.kernels import _fast
except ImportError:
    _fast = None


def time_call(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--problems", type=int, default=100_000)
    parser.add_argument("--units", type=int, default=32)
    parser.add_argument("--keys", type=int, default=6)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    correct = (rng.random((args.problems, args.units)) < 0.3).astype(np.uint8)
    keys = rng.integers(0, args.keys, size=(args.problems, args.units), dtype=np.int32)
    n_units = np.full(args.problems, args.units, dtype=np.int64)
    gold = np.zeros(args.problems, dtype=np.int32)

    cases = [
        ("first_correct_unit", lambda impl: impl.first_correct_unit(correct, n_units)),
        (
            "prefix_gold_majority",
            lambda impl: impl.prefix_gold_majority(keys, n_units, gold, args.keys),
        ),
    ]

    print(f"problems={args.problems} units={args.units} keys={args.keys}")
    header = f"{'kernel':24} {'python':>10} {'cython':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        ref_time = time_call(call, _ref)
        if _fast is None:
            print(f"{name:24} {ref_time * 1e3:9.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        fast_time = time_call(call, _fast)
        np.testing.assert_array_equal(call(_ref), call(_fast))
        print(
            f"{name:24} {ref_time * 1e3:9.1f}ms {fast_time * 1e3:9.1f}ms "
            f"{ref_time / fast_time:7.1f}x"
        )
    if _fast is None:
        print("compiled backend not built; install with a C compiler to compare")


if __name__ == "__main__":
    main()
