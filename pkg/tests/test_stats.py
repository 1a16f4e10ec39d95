import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldsim import source, stats
from heraldsim.config import ExperimentConfig
from heraldsim.source import ClickBatch, TrialRecord
from heraldsim.stats import (
    UndefinedStatisticError,
    bootstrap,
    cauchy_schwarz,
    conditional_g2_rr,
    correct_for_detection,
    g2_auto,
    g2_cross,
    retrieval_efficiency,
    window_counts,
)


def records_from_clicks(write_lists, read_lists):
    return [TrialRecord(i, 30e-6, np.asarray(w, float), np.asarray(r, float))
            for i, (w, r) in enumerate(zip(write_lists, read_lists))]


class TestWindowCounts:
    def test_empty_record(self):
        c = window_counts(records_from_clicks([[]], [[]]), (0, 1e-4), (0, 4e-5))
        assert (c.n_w[0], c.n_r[0]) == (0, 0)

    def test_inclusion(self):
        recs = records_from_clicks([[]], [[1e-6, 5e-6, 39e-6]])
        assert window_counts(recs, (0, 1e-4), (0, 40e-6)).n_r[0] == 3

    def test_half_open_boundary(self):
        recs = records_from_clicks([[]], [[1e-6, 5e-6, 39e-6]])
        assert window_counts(recs, (0, 1e-4), (0, 5e-6)).n_r[0] == 1

    def test_inverted_window_rejected(self):
        with pytest.raises(ValueError, match="inverted"):
            window_counts(records_from_clicks([[]], [[]]), (1e-5, 0.0), (0, 1e-5))

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 1e-4), max_size=30),
           st.floats(0, 1e-4), st.floats(0, 1e-4), st.floats(0, 1e-4))
    def test_counts_additive_over_partition(self, clicks, a, b, c):
        a, b, c = sorted((a, b, c))
        recs = records_from_clicks([[]], [sorted(clicks)])
        lo_hi = window_counts(recs, (0, 1), (a, c)).n_r[0]
        split = (window_counts(recs, (0, 1), (a, b)).n_r[0]
                 + window_counts(recs, (0, 1), (b, c)).n_r[0])
        assert lo_hi == split


class TestG2Auto:
    def test_hand_enumeration(self):
        assert g2_auto([2, 0, 0]) == pytest.approx(1.5)

    def test_single_photons_never_coincide(self):
        assert g2_auto([1] * 50) == 0.0

    def test_poisson_is_one(self):
        rng = np.random.default_rng(0)
        assert g2_auto(rng.poisson(0.1, 2_000_000)) == pytest.approx(1.0, abs=0.02)

    def test_thermal_is_two(self):
        rng = np.random.default_rng(1)
        n = rng.geometric(1 / 1.5, 2_000_000) - 1
        assert g2_auto(n) == pytest.approx(2.0, abs=0.02)

    def test_all_zero_undefined(self):
        with pytest.raises(UndefinedStatisticError):
            g2_auto([0, 0, 0])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(0, 6), min_size=5, max_size=200).filter(lambda v: sum(v) > 4))
    def test_thinning_invariance(self, counts):
        # estimator identity under 50 percent binomial thinning, statistically
        n = np.repeat(np.asarray(counts), 2000)
        rng = np.random.default_rng(hash(tuple(counts)) % 2**32)
        thinned = rng.binomial(n, 0.5)
        if thinned.sum() == 0:
            return
        g_full = g2_auto(n)
        g_thin = g2_auto(thinned)
        assert g_thin == pytest.approx(g_full, abs=max(0.15, 0.1 * g_full))


class TestG2Cross:
    def test_hand_enumeration(self):
        assert g2_cross([0, 1, 2], [1, 0, 1]) == pytest.approx(1.0)

    def test_independent_poisson(self):
        rng = np.random.default_rng(2)
        a = rng.poisson(0.3, 1_000_000)
        b = rng.poisson(0.2, 1_000_000)
        assert g2_cross(a, b) == pytest.approx(1.0, abs=0.01)

    def test_zero_mean_rejected(self):
        with pytest.raises(UndefinedStatisticError):
            g2_cross([0, 0], [1, 2])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            g2_cross([1, 2], [1, 2, 3])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)),
                    min_size=3, max_size=50))
    def test_symmetric_in_arguments(self, pairs):
        a = [p[0] for p in pairs]
        b = [p[1] for p in pairs]
        if sum(a) == 0 or sum(b) == 0:
            return
        assert g2_cross(a, b) == g2_cross(b, a)


class TestCauchySchwarz:
    def test_paper_values(self):
        assert cauchy_schwarz(1.86, 1.45, 1.97) == pytest.approx(1.439, abs=1e-3)

    def test_two_mode_boundary(self):
        assert cauchy_schwarz(2.0, 2.0, 2.0) == pytest.approx(1.0)

    def test_coherent_fields(self):
        assert cauchy_schwarz(1.0, 1.0, 1.0) == pytest.approx(1.0)

    def test_zero_denominator(self):
        with pytest.raises(UndefinedStatisticError):
            cauchy_schwarz(0.0, 1.0, 1.0)

    def test_scale_free_under_thinning(self):
        # thinning both fields leaves every g2 (hence R) invariant
        rng = np.random.default_rng(3)
        n = rng.geometric(1 / 1.3, 1_000_000) - 1
        w = rng.binomial(n, 0.7)
        r = rng.binomial(n, 0.4)
        full = cauchy_schwarz(g2_auto(w), g2_auto(r), g2_cross(w, r))
        w2 = rng.binomial(w, 0.5)
        r2 = rng.binomial(r, 0.5)
        thin = cauchy_schwarz(g2_auto(w2), g2_auto(r2), g2_cross(w2, r2))
        assert thin == pytest.approx(full, rel=0.05)


class TestRetrievalEfficiency:
    def test_paper_arithmetic(self):
        # 400 heralded trials averaging 0.0300, 2000 trials averaging 0.0145
        n_r = np.zeros(2000)
        n_r[:400] = 0.0
        heralded = np.zeros(2000, bool)
        heralded[:400] = True
        n_r[:12] = 1.0          # heralded mean 12/400 = 0.03
        n_r[400:417] = 1.0      # total mean 29/2000 = 0.0145
        eta, intrinsic = retrieval_efficiency(n_r, heralded, 0.096)
        assert eta == pytest.approx(0.0155)
        assert intrinsic == pytest.approx(0.161, abs=5e-4)

    def test_no_memory_effect(self):
        n_r = np.array([0, 1, 2, 0])
        eta, _ = retrieval_efficiency(n_r, np.ones(4, bool), 0.5)
        assert eta == 0.0

    def test_no_heralds_rejected(self):
        with pytest.raises(UndefinedStatisticError):
            retrieval_efficiency(np.array([1.0]), np.array([False]), 0.5)


class TestCorrectForDetection:
    def test_paper_chain(self):
        assert correct_for_detection(0.014, 0.096, 0.62) == pytest.approx(0.235, abs=5e-4)

    def test_identity(self):
        assert correct_for_detection(0.37, 1.0, 1.0) == 0.37

    def test_zero_rate(self):
        assert correct_for_detection(0.0, 0.5, 0.5) == 0.0

    def test_zero_efficiency_rejected(self):
        with pytest.raises(ValueError):
            correct_for_detection(0.1, 0.0, 0.5)


class TestBootstrap:
    def test_identical_trials_zero_stderr(self):
        data = np.full(500, 3.0)
        est, err = bootstrap(data, np.mean, n_resamples=200, seed=0)
        assert est == 3.0
        assert err == 0.0

    def test_poisson_mean_standard_error(self):
        rng = np.random.default_rng(4)
        data = rng.poisson(0.1, 10_000).astype(float)
        est, err = bootstrap(data, np.mean, n_resamples=2000, seed=1)
        assert err == pytest.approx(np.sqrt(0.1 / 10_000), rel=0.10)

    def test_stderr_stable_under_resample_doubling(self):
        rng = np.random.default_rng(5)
        data = rng.poisson(0.1, 10_000).astype(float)
        _, err1 = bootstrap(data, np.mean, n_resamples=4000, seed=2)
        _, err2 = bootstrap(data, np.mean, n_resamples=8000, seed=3)
        assert abs(err2 - err1) / err1 < 0.05

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        data = rng.poisson(1.0, 300).astype(float)
        assert bootstrap(data, np.mean, 100, seed=9) == bootstrap(data, np.mean, 100, seed=9)

    def test_undefined_resamples_redrawn(self):
        # statistic defined on the full data but not on every resample
        data = np.array([1.0] + [0.0] * 9)

        def stat(x):
            x = np.asarray(x)
            if x.sum() == 0:
                raise UndefinedStatisticError("empty")
            return x.mean()

        est, err = bootstrap(data, stat, n_resamples=300, seed=10)
        assert est == pytest.approx(0.1)
        assert err > 0

    def test_redraw_cap(self):
        data = np.arange(10, dtype=float)

        def stat(x):
            # defined on the original ordered data, undefined on resamples
            if np.array_equal(np.asarray(x), data):
                return 1.0
            raise UndefinedStatisticError("resample only")

        with pytest.raises(UndefinedStatisticError, match="resamples"):
            bootstrap(data, stat, n_resamples=10, seed=0)


class TestConditionalG2:
    def test_conditioning_on_everything_equals_unconditional(self):
        rng = np.random.default_rng(7)
        n_r = rng.poisson(0.5, 5000)
        counts = stats.WindowCounts(np.ones(5000, np.int64), n_r)
        assert conditional_g2_rr(counts) == pytest.approx(g2_auto(n_r))

    def test_heralded_all_zero_is_undefined(self):
        counts = stats.WindowCounts(np.array([1, 0, 1]), np.array([0, 5, 0]))
        with pytest.raises(UndefinedStatisticError):
            conditional_g2_rr(counts)

    def test_nominal_simulated_value_is_subthermal(self):
        # Poisson-modeled FWM and leakage cap the heralded autocorrelation
        # near one; retrieval conditioning pushes it below
        batch = source.simulate(ExperimentConfig(), 2_000_000, master_seed=20,
                                threads=4)
        val = conditional_g2_rr(batch)
        assert 0.3 < val < 1.6


class TestAnalyzeCorrelations:
    def test_nominal_batch_summary(self):
        batch = source.simulate(ExperimentConfig(), 400_000, master_seed=21, threads=4)
        res = stats.analyze_correlations(batch, n_resamples=120, seed=1)
        assert res.n_trials == 400_000
        assert res.n_heralds > 4000
        assert res.g2_ww == pytest.approx(2.0, abs=5 * res.g2_ww_err)
        assert res.R > 1.0
        assert 0.0 < res.R_err < 2.0
        assert res.eta_r == pytest.approx(0.0155, abs=4 * res.eta_r_err)
        assert res.eta_r_intrinsic == pytest.approx(res.eta_r / 0.096, rel=1e-9)
        assert res.flags == ""

    def test_zero_reads_flagged_not_fatal(self):
        recs = records_from_clicks([[1e-6], [2e-6], []], [[], [], []])
        res = stats.analyze_correlations(recs, write_window=(0, 1e-4),
                                         read_window=(0, 4e-5), n_resamples=50)
        assert np.isnan(res.g2_rr)
        assert "g2_rr" in res.flags
        assert res.g2_ww == 0.0  # single write photons never coincide
        assert res.eta_r == 0.0

    def test_csv_roundtrip(self, tmp_path):
        batch = source.simulate(ExperimentConfig(), 50_000, master_seed=22)
        res = stats.analyze_correlations(batch, n_resamples=60, seed=2)
        path = tmp_path / "out.csv"
        stats.write_correlation_csv(path, [(30e-6, 40e-6, res)])
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2
        header = lines[0].split(",")
        assert "g2_wr" in header and "R" in header and "eta_r_err" in header


def test_group_by_delay():
    cfg = ExperimentConfig()
    batch = source.ClickBatch.concat([
        source.simulate(cfg.with_updates(write_read_delay=10e-6), 1000, master_seed=1),
        source.simulate(cfg.with_updates(write_read_delay=50e-6), 1500, master_seed=2),
    ])
    groups = list(stats.group_by_delay(batch))
    assert [g[0] for g in groups] == [10e-6, 50e-6]
    assert [g[1].n_trials for g in groups] == [1000, 1500]
