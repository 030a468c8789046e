"""Aggregation kernels with a compiled fast path.

The Cython extension ``_fast`` is built at install time when a compiler is
available; otherwise (or when ``TTSPLATEAU_PURE_PYTHON`` is set to a
non-empty value) the pure-Python ``_ref`` implementation is used. Both
produce identical results; ``benchmarks/bench_kernels.py`` compares their
speed.

Wrappers here normalize dtypes and layout so callers can pass any
reasonable array.
"""

from __future__ import annotations

import os

import numpy as np

from . import _ref

try:
    from . import _fast
except ImportError:  # extension not built
    _fast = None

if _fast is None or os.environ.get("TTSPLATEAU_PURE_PYTHON"):
    _impl = _ref
    BACKEND = "python"
else:
    _impl = _fast
    BACKEND = "cython"

__all__ = ["BACKEND", "first_correct_unit", "prefix_gold_majority"]


def _as_matrix(a: np.ndarray, dtype: np.dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    return a


def _as_counts(n_units: np.ndarray, n_rows: int, n_cols: int) -> np.ndarray:
    n_units = np.ascontiguousarray(n_units, dtype=np.int64)
    if n_units.shape != (n_rows,):
        raise ValueError(f"n_units must have shape ({n_rows},), got {n_units.shape}")
    if n_units.size and (n_units.min() < 0 or n_units.max() > n_cols):
        raise ValueError("n_units entries must be within [0, number of columns]")
    return n_units


def first_correct_unit(correct: np.ndarray, n_units: np.ndarray) -> np.ndarray:
    """1-based first correct unit per row (0 = never correct)."""
    correct = _as_matrix(correct, np.uint8)
    n_units = _as_counts(n_units, correct.shape[0], correct.shape[1])
    return _impl.first_correct_unit(correct, n_units)


def prefix_gold_majority(
    keys: np.ndarray, n_units: np.ndarray, gold: np.ndarray, n_keys: int
) -> np.ndarray:
    """Per-prefix majority-vote correctness; see ``_ref.prefix_gold_majority``."""
    keys = _as_matrix(keys, np.int32)
    n_units = _as_counts(n_units, keys.shape[0], keys.shape[1])
    gold = np.ascontiguousarray(gold, dtype=np.int32)
    if gold.shape != (keys.shape[0],):
        raise ValueError(f"gold must have shape ({keys.shape[0]},), got {gold.shape}")
    if n_keys < 1:
        raise ValueError("n_keys must be >= 1")
    return _impl.prefix_gold_majority(keys, n_units, gold, int(n_keys))
