# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled click assembly kernels.

Must match heraldsim._assembly_py bit for bit: same candidate ordering
(time, stream, draw index; the insertion sort below is stable) and the same
non-paralyzable dead-time comparison.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "c"


def assemble_trials(Py_ssize_t n_trials, double dead_time, counts_in, times_in):
    """See heraldsim._assembly_py.assemble_trials."""
    cdef cnp.int64_t[:, ::1] counts = np.ascontiguousarray(counts_in, dtype=np.int64)
    cdef double[::1] times = np.ascontiguousarray(times_in, dtype=np.float64)
    cdef Py_ssize_t n_streams = counts.shape[0]
    cdef Py_ssize_t i, s, j, k, m, pos, kept, total
    cdef double key, last

    total = 0
    cdef Py_ssize_t max_m = 0
    for i in range(n_trials):
        m = 0
        for s in range(n_streams):
            m += counts[s, i]
        total += m
        if m > max_m:
            max_m = m
    if times.shape[0] != total:
        raise ValueError("times length does not match counts")

    # running cursor per stream into the stream-major flat times array
    cursor_np = np.zeros(n_streams, dtype=np.int64)
    cdef cnp.int64_t[::1] cursor = cursor_np
    cdef Py_ssize_t base = 0
    for s in range(n_streams):
        cursor[s] = base
        for i in range(n_trials):
            base += counts[s, i]

    out_offsets_np = np.zeros(n_trials + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] out_offsets = out_offsets_np
    out_times_np = np.empty(total, dtype=np.float64)
    cdef double[::1] out_times = out_times_np
    scratch_np = np.empty(max_m if max_m > 0 else 1, dtype=np.float64)
    cdef double[::1] scratch = scratch_np

    pos = 0
    for i in range(n_trials):
        m = 0
        for s in range(n_streams):
            for j in range(counts[s, i]):
                scratch[m] = times[cursor[s] + j]
                m += 1
            cursor[s] += counts[s, i]
        # stable insertion sort: equal times keep (stream, draw) order
        for j in range(1, m):
            key = scratch[j]
            k = j - 1
            while k >= 0 and scratch[k] > key:
                scratch[k + 1] = scratch[k]
                k -= 1
            scratch[k + 1] = key
        if dead_time > 0.0:
            kept = 0
            last = -np.inf
            for j in range(m):
                if scratch[j] - last >= dead_time:
                    out_times[pos + kept] = scratch[j]
                    last = scratch[j]
                    kept += 1
            pos += kept
        else:
            for j in range(m):
                out_times[pos + j] = scratch[j]
            pos += m
        out_offsets[i + 1] = pos

    return out_offsets_np, out_times_np[:pos].copy()


def window_counts(offsets_in, times_in, double lo, double hi):
    """Per-trial click counts inside the half-open window [lo, hi)."""
    cdef cnp.int64_t[::1] offsets = np.ascontiguousarray(offsets_in, dtype=np.int64)
    cdef double[::1] times = np.ascontiguousarray(times_in, dtype=np.float64)
    cdef Py_ssize_t n_trials = offsets.shape[0] - 1
    cdef Py_ssize_t i, j, c
    out_np = np.zeros(n_trials, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_np
    for i in range(n_trials):
        c = 0
        for j in range(offsets[i], offsets[i + 1]):
            if times[j] >= lo and times[j] < hi:
                c += 1
        out[i] = c
    return out_np
