"""Pure-Python reference kernels.

Semantically identical to the compiled versions in ``_fast.pyx``; the
compiled module is preferred at import when available. Keep the two in
lockstep — tests assert exact agreement.
"""

from __future__ import annotations

import numpy as np


def first_correct_unit(correct: np.ndarray, n_units: np.ndarray) -> np.ndarray:
    """1-based index of the first correct unit per row, 0 when none.

    Only the first ``n_units[i]`` cells of row ``i`` are inspected.
    """
    n_rows = correct.shape[0]
    out = np.zeros(n_rows, dtype=np.int64)
    for i in range(n_rows):
        row = correct[i]
        for j in range(int(n_units[i])):
            if row[j]:
                out[i] = j + 1
                break
    return out


def prefix_gold_majority(
    keys: np.ndarray, n_units: np.ndarray, gold: np.ndarray, n_keys: int
) -> np.ndarray:
    """Majority-vote correctness for every prefix length.

    ``out[i, j]`` is 1 iff the plurality winner of ``keys[i, :j+1]`` equals
    ``gold[i]``. Ties go to the key whose earliest vote has the lowest unit
    index. ``gold[i] = -1`` means the problem has no gold key and every
    prefix counts as incorrect.
    """
    n_rows, n_cols = keys.shape
    out = np.zeros((n_rows, n_cols), dtype=np.uint8)
    for i in range(n_rows):
        counts: dict[int, int] = {}
        first_seen: dict[int, int] = {}
        best_key = -1
        best_count = 0
        best_first = 1 << 62
        g = int(gold[i])
        for j in range(int(n_units[i])):
            k = int(keys[i, j])
            if k < 0 or k >= n_keys:
                raise ValueError(f"key id {k} out of range [0, {n_keys}) at row {i}, unit {j + 1}")
            c = counts.get(k, 0) + 1
            counts[k] = c
            if k not in first_seen:
                first_seen[k] = j
            if c > best_count or (c == best_count and first_seen[k] < best_first):
                best_key = k
                best_count = c
                best_first = first_seen[k]
            if best_key == g:
                out[i, j] = 1
    return out
