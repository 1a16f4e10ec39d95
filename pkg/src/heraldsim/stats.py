"""Photon-counting statistics from click records.

Correlation functions use the count-based estimator
g2_ij = <n_i (n_j - delta_ij)> / (<n_i><n_j>): the filter cavities stretch
each photon wave packet far beyond the detector dead time, so photon number
resolves onto a single detector and factorial moments of window counts are
the right estimator. Windows are half-open [start, end) so counts are
additive over partitions.

Undefined statistics (zero means) raise UndefinedStatisticError rather than
returning NaN; silent NaN propagation would corrupt bootstrap distributions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

from . import assembly
from .fits import BinnedSeries
from .source import ClickBatch


class UndefinedStatisticError(ValueError):
    """A requested statistic is undefined on the given data (e.g. zero mean)."""


@dataclass
class WindowCounts:
    """Per-trial click counts in the write and read windows."""

    n_w: np.ndarray
    n_r: np.ndarray

    def __len__(self):
        return self.n_w.size

    def __iter__(self):
        return zip(self.n_w, self.n_r)

    def take(self, indices):
        return WindowCounts(self.n_w[indices], self.n_r[indices])


@dataclass
class CorrelationResult:
    g2_ww: float
    g2_rr: float
    g2_wr: float
    g2_rr_given_w: float
    R: float
    eta_r: float
    eta_r_intrinsic: float
    g2_ww_err: float
    g2_rr_err: float
    g2_wr_err: float
    g2_rr_given_w_err: float
    R_err: float
    eta_r_err: float
    eta_r_intrinsic_err: float
    n_trials: int
    n_heralds: int
    flags: str = ""


def _offsets_times(records, which: str):
    if isinstance(records, ClickBatch):
        if which == "write":
            return records.write_offsets, records.write_times
        return records.read_offsets, records.read_times
    clicks = [np.asarray(getattr(r, f"{which}_clicks"), dtype=float) for r in records]
    offsets = np.zeros(len(clicks) + 1, dtype=np.int64)
    np.cumsum([c.size for c in clicks], out=offsets[1:])
    times = np.concatenate(clicks) if clicks else np.empty(0)
    return offsets, times


def window_counts(records, write_window, read_window) -> WindowCounts:
    """Per-trial counts in half-open [start, end) windows."""
    for name, (lo, hi) in (("write", write_window), ("read", read_window)):
        if hi < lo:
            raise ValueError(f"inverted {name} window: [{lo}, {hi})")
    records_list = records if isinstance(records, ClickBatch) else list(records)
    w_off, w_t = _offsets_times(records_list, "write")
    r_off, r_t = _offsets_times(records_list, "read")
    n_w = assembly.window_counts(w_off, w_t, float(write_window[0]), float(write_window[1]))
    n_r = assembly.window_counts(r_off, r_t, float(read_window[0]), float(read_window[1]))
    return WindowCounts(np.asarray(n_w), np.asarray(n_r))


def g2_auto(counts) -> float:
    """Auto-correlation <n(n-1)>/<n>^2 (the Kronecker-delta-corrected form)."""
    n = np.asarray(counts, dtype=float)
    mean = n.mean() if n.size else 0.0
    if mean <= 0:
        raise UndefinedStatisticError("g2_auto undefined: zero mean count")
    return float((n * (n - 1.0)).mean() / mean**2)


def g2_cross(counts_w, counts_r) -> float:
    """Cross-correlation <n_w n_r>/(<n_w><n_r>) over paired trials."""
    a = np.asarray(counts_w, dtype=float)
    b = np.asarray(counts_r, dtype=float)
    if a.shape != b.shape:
        raise ValueError("count lists must be paired (same length)")
    ma = a.mean() if a.size else 0.0
    mb = b.mean() if b.size else 0.0
    if ma <= 0 or mb <= 0:
        raise UndefinedStatisticError("g2_cross undefined: zero mean count")
    return float((a * b).mean() / (ma * mb))


def cauchy_schwarz(g2_ww: float, g2_rr: float, g2_wr: float) -> float:
    """R = g2_wr^2 / (g2_ww g2_rr); R > 1 is impossible for classical fields."""
    denom = g2_ww * g2_rr
    if denom <= 0:
        raise UndefinedStatisticError("Cauchy-Schwarz ratio undefined: zero denominator")
    return g2_wr * g2_wr / denom


def retrieval_efficiency(read_counts, heralded, detection_efficiency: float):
    """(eta_R, intrinsic eta_R): heralded minus unconditional read probability.

    The intrinsic value corrects for transmission loss and detector quantum
    efficiency, i.e. divides by the calibrated detection efficiency.
    """
    n_r = np.asarray(read_counts, dtype=float)
    h = np.asarray(heralded, dtype=bool)
    if n_r.shape != h.shape:
        raise ValueError("read_counts and heralded must be paired")
    if not h.any():
        raise UndefinedStatisticError("no heralded trials")
    if not (0 < detection_efficiency <= 1):
        raise ValueError("detection_efficiency must be in (0, 1]")
    eta = float(n_r[h].mean() - n_r.mean())
    return eta, eta / detection_efficiency


def correct_for_detection(count_rate: float, detection_efficiency: float,
                          escape_efficiency: float) -> float:
    """Detected rate back-propagated to the source: rate / (eta_det eta_esc)."""
    if not (0 < detection_efficiency <= 1) or not (0 < escape_efficiency <= 1):
        raise ValueError("efficiencies must be in (0, 1]")
    return count_rate / (detection_efficiency * escape_efficiency)


def conditional_g2_rr(records, tau_r: float = 40e-6, write_window=None) -> float:
    """Read auto-correlation restricted to heralded trials."""
    counts = _counts_for(records, tau_r, write_window)
    heralded = counts.n_w >= 1
    if not heralded.any():
        raise UndefinedStatisticError("no heralded trials")
    return g2_auto(counts.n_r[heralded])


def _counts_for(records, tau_r, write_window):
    if isinstance(records, WindowCounts):
        return records
    if write_window is None:
        meta = records.meta if isinstance(records, ClickBatch) else {}
        write_window = tuple(meta.get("default_write_window_s", (0.0, np.inf)))
    return window_counts(records, write_window, (0.0, tau_r))


def bootstrap(records, statistic, n_resamples: int = 1000, seed: int = 0):
    """(estimate, stderr) of ``statistic`` by trial-level resampling.

    Resamples whole write-read trials with replacement (preserving
    write-read correlations), evaluating ``statistic`` on each resample.
    Resamples on which the statistic is undefined are redrawn, up to
    10 * n_resamples attempts. Deterministic given ``seed``: each resample
    draws its indices from its own counter-based stream.
    """
    if n_resamples < 2:
        raise ValueError("need at least 2 resamples")
    estimate = statistic(records)
    n = len(records)
    values = np.empty(n_resamples)
    got = 0
    attempts = 0
    max_attempts = 10 * n_resamples
    while got < n_resamples:
        if attempts >= max_attempts:
            raise UndefinedStatisticError(
                f"statistic undefined on too many resamples ({attempts} attempts)")
        key = np.array([np.uint64(seed), np.uint64(attempts)], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        idx = rng.integers(0, n, size=n)
        attempts += 1
        try:
            values[got] = statistic(_take(records, idx))
        except UndefinedStatisticError:
            continue
        got += 1
    return float(estimate), float(values.std(ddof=1))


def _take(records, idx):
    if hasattr(records, "take"):
        return records.take(idx)
    if isinstance(records, np.ndarray):
        return records[idx]
    return [records[i] for i in idx]


def analyze_correlations(records, write_window=None, read_window=None,
                         detection_efficiency: float = 0.096,
                         n_resamples: int = 500, seed: int = 0) -> CorrelationResult:
    """Full correlation summary with bootstrap uncertainties.

    Works on a ClickBatch (windows default to the batch metadata) or any
    iterable of trial records with explicit windows.
    """
    if isinstance(records, ClickBatch):
        meta = records.meta
        if write_window is None:
            write_window = tuple(meta.get("default_write_window_s"))
        if read_window is None:
            read_window = tuple(meta.get("default_read_window_s"))
    if write_window is None or read_window is None:
        raise ValueError("windows required for non-batch records")
    counts = window_counts(records, write_window, read_window)

    stats_fns = {
        "g2_ww": lambda c: g2_auto(c.n_w),
        "g2_rr": lambda c: g2_auto(c.n_r),
        "g2_wr": lambda c: g2_cross(c.n_w, c.n_r),
        "g2_rr_given_w": lambda c: _heralded_g2(c),
        "R": lambda c: cauchy_schwarz(g2_auto(c.n_w), g2_auto(c.n_r),
                                      g2_cross(c.n_w, c.n_r)),
        "eta_r": lambda c: retrieval_efficiency(c.n_r, c.n_w >= 1,
                                                detection_efficiency)[0],
        "eta_r_intrinsic": lambda c: retrieval_efficiency(c.n_r, c.n_w >= 1,
                                                          detection_efficiency)[1],
    }
    out: dict = {}
    flags = []
    for name, fn in stats_fns.items():
        try:
            out[name] = fn(counts)
        except UndefinedStatisticError:
            out[name] = math.nan
            flags.append(name)

    # all statistics share each resample (one trial-level redraw per resample)
    n = len(counts)
    draws = {name: [] for name in stats_fns}
    for r in range(n_resamples):
        key = np.array([np.uint64(seed), np.uint64(r)], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        sub = counts.take(rng.integers(0, n, size=n))
        for name, fn in stats_fns.items():
            try:
                draws[name].append(fn(sub))
            except UndefinedStatisticError:
                pass
    for name in stats_fns:
        vals = np.asarray(draws[name])
        # a statistic is only reported when most resamples can evaluate it
        if math.isnan(out[name]) or vals.size < max(2, n_resamples // 10):
            out[name + "_err"] = math.nan
            if name not in flags:
                flags.append(name)
            out[name] = math.nan
        else:
            out[name + "_err"] = float(vals.std(ddof=1))
    return CorrelationResult(
        n_trials=len(counts), n_heralds=int((counts.n_w >= 1).sum()),
        flags=";".join(flags), **out)


def _heralded_g2(counts: WindowCounts) -> float:
    h = counts.n_w >= 1
    if not h.any():
        raise UndefinedStatisticError("no heralded trials")
    return g2_auto(counts.n_r[h])


def binned_read_rates(records, bin_edges, heralded: bool = False,
                      write_window=None) -> BinnedSeries:
    """Detected read rate per trial versus time, histogrammed on ``bin_edges``.

    Normalized by bin width and by the number of trials (or, for
    ``heralded``, by the number of trials with at least one write click);
    per-bin errors are Poisson with a one-count floor for empty bins.
    """
    edges = np.asarray(bin_edges, dtype=float)
    records_list = records if isinstance(records, ClickBatch) else list(records)
    r_off, r_t = _offsets_times(records_list, "read")
    n_trials = r_off.size - 1
    if heralded:
        if write_window is None:
            meta = records.meta if isinstance(records, ClickBatch) else {}
            write_window = tuple(meta.get("default_write_window_s", (0.0, np.inf)))
        w_off, w_t = _offsets_times(records_list, "write")
        n_w = np.asarray(assembly.window_counts(
            w_off, w_t, float(write_window[0]), float(write_window[1])))
        mask = n_w >= 1
        if not mask.any():
            raise UndefinedStatisticError("no heralded trials")
        trial_ids = np.repeat(np.arange(n_trials), np.diff(r_off))
        r_t = r_t[mask[trial_ids]]
        norm = int(mask.sum())
    else:
        norm = n_trials
    counts, _ = np.histogram(r_t, bins=edges)
    widths = np.diff(edges)
    rate = counts / (norm * widths)
    err = np.sqrt(np.maximum(counts, 1.0)) / (norm * widths)
    return BinnedSeries(t=0.5 * (edges[:-1] + edges[1:]), y=rate, yerr=err)


def write_correlation_csv(path, rows) -> None:
    """One CSV row per (delay, tau_r) cell: all CorrelationResult fields."""
    result_fields = [f.name for f in fields(CorrelationResult)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay_s", "tau_r_s"] + result_fields)
        for delay, tau_r, res in rows:
            writer.writerow([delay, tau_r] + [getattr(res, f) for f in result_fields])


def group_by_delay(batch: ClickBatch):
    """Split a batch into per-delay sub-batches (sorted by delay)."""
    for d in np.unique(batch.delays):
        idx = np.nonzero(batch.delays == d)[0]
        yield float(d), batch.take(idx)
