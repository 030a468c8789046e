# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: first-success scan and prefix majority voting.

Must stay semantically identical to ``_ref.py``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def first_correct_unit(const cnp.uint8_t[:, ::1] correct, const cnp.int64_t[::1] n_units):
    cdef Py_ssize_t n_rows = correct.shape[0]
    out = np.zeros(n_rows, dtype=np.int64)
    cdef cnp.int64_t[::1] out_v = out
    cdef Py_ssize_t i, j, limit
    for i in range(n_rows):
        limit = <Py_ssize_t> n_units[i]
        for j in range(limit):
            if correct[i, j]:
                out_v[i] = j + 1
                break
    return out


def prefix_gold_majority(
    const cnp.int32_t[:, ::1] keys,
    const cnp.int64_t[::1] n_units,
    const cnp.int32_t[::1] gold,
    int n_keys,
):
    cdef Py_ssize_t n_rows = keys.shape[0]
    cdef Py_ssize_t n_cols = keys.shape[1]
    out = np.zeros((n_rows, n_cols), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out_v = out

    counts_arr = np.zeros(n_keys, dtype=np.int64)
    first_arr = np.full(n_keys, -1, dtype=np.int64)
    touched_arr = np.empty(n_cols, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef cnp.int64_t[::1] first_seen = first_arr
    cdef cnp.int64_t[::1] touched = touched_arr

    cdef Py_ssize_t i, j, limit, n_touched, t
    cdef cnp.int64_t c, best_count, best_first
    cdef cnp.int32_t k, g, best_key

    for i in range(n_rows):
        limit = <Py_ssize_t> n_units[i]
        g = gold[i]
        best_key = -1
        best_count = 0
        best_first = (<cnp.int64_t> 1) << 62
        n_touched = 0
        for j in range(limit):
            k = keys[i, j]
            if k < 0 or k >= n_keys:
                # reset before raising so the buffers stay clean
                for t in range(n_touched):
                    counts[touched[t]] = 0
                    first_seen[touched[t]] = -1
                raise ValueError(
                    f"key id {k} out of range [0, {n_keys}) at row {i}, unit {j + 1}"
                )
            if first_seen[k] < 0:
                first_seen[k] = j
                touched[n_touched] = k
                n_touched += 1
            c = counts[k] + 1
            counts[k] = c
            if c > best_count or (c == best_count and first_seen[k] < best_first):
                best_key = k
                best_count = c
                best_first = first_seen[k]
            if best_key == g:
                out_v[i, j] = 1
        for t in range(n_touched):
            counts[touched[t]] = 0
            first_seen[touched[t]] = -1
    return out
