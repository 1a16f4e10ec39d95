"""Pure-numpy click assembly kernels (fallback backend).

Semantics must match heraldsim._assembly (the Cython backend) bit for bit:
both consume the same pre-drawn candidate times and produce identical
ragged click arrays. Candidate order within a trial is (time, stream,
draw index); the dead-time merge is non-paralyzable.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def assemble_trials(n_trials: int, dead_time: float, counts, times):
    """Merge per-stream candidate clicks into sorted, dead-time-filtered trials.

    counts: int64 (n_streams, n_trials) survivor counts per stream and trial.
    times:  float64 flat array, stream-major: all stream-0 candidates
            (trial-major), then all stream-1 candidates, ...
    Returns (offsets, merged_times): offsets has n_trials+1 entries.
    """
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    times = np.ascontiguousarray(times, dtype=np.float64)
    n_streams = counts.shape[0]
    per_stream_total = counts.sum(axis=1)
    if times.size != per_stream_total.sum():
        raise ValueError("times length does not match counts")

    trial_ids = np.concatenate(
        [np.repeat(np.arange(n_trials, dtype=np.int64), counts[s]) for s in range(n_streams)]
    ) if times.size else np.empty(0, dtype=np.int64)
    stream_ids = np.concatenate(
        [np.full(per_stream_total[s], s, dtype=np.int64) for s in range(n_streams)]
    ) if times.size else np.empty(0, dtype=np.int64)
    intra = np.concatenate(
        [np.arange(per_stream_total[s], dtype=np.int64) for s in range(n_streams)]
    ) if times.size else np.empty(0, dtype=np.int64)

    order = np.lexsort((intra, stream_ids, times, trial_ids))
    t_sorted = times[order]
    trial_sorted = trial_ids[order]

    seg = counts.sum(axis=0)
    offsets = np.zeros(n_trials + 1, dtype=np.int64)
    np.cumsum(seg, out=offsets[1:])

    if dead_time <= 0.0 or t_sorted.size == 0:
        return offsets, t_sorted

    keep = np.zeros(t_sorted.size, dtype=bool)
    last = np.full(n_trials, -np.inf)
    trials = np.arange(n_trials, dtype=np.int64)
    max_m = int(seg.max()) if n_trials else 0
    for k in range(max_m):
        has = seg > k
        idx = offsets[:-1][has] + k
        tr = trials[has]
        t = t_sorted[idx]
        ok = (t - last[tr]) >= dead_time
        keep[idx[ok]] = True
        last[tr[ok]] = t[ok]

    kept_counts = np.bincount(trial_sorted[keep], minlength=n_trials).astype(np.int64)
    out_offsets = np.zeros(n_trials + 1, dtype=np.int64)
    np.cumsum(kept_counts, out=out_offsets[1:])
    return out_offsets, t_sorted[keep]


def window_counts(offsets, times, lo: float, hi: float):
    """Per-trial click counts inside the half-open window [lo, hi)."""
    offsets = np.asarray(offsets, dtype=np.int64)
    times = np.asarray(times, dtype=np.float64)
    n_trials = offsets.size - 1
    if times.size == 0:
        return np.zeros(n_trials, dtype=np.int64)
    mask = (times >= lo) & (times < hi)
    trial_ids = np.repeat(np.arange(n_trials, dtype=np.int64), np.diff(offsets))
    return np.bincount(trial_ids[mask], minlength=n_trials).astype(np.int64)
