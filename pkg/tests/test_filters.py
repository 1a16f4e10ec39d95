import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldsim.config import CavitySpec
from heraldsim.filters import (
    cavity_transmission,
    chain_transmission,
    delay_cdf,
    mean_total_delay,
    relative_suppression,
    response_kernel,
    sample_delay,
)

NARROW = CavitySpec(fwhm=66e3, peak_transmission=0.66)
WIDE = CavitySpec(fwhm=900e3, peak_transmission=0.90)
NOMINAL = (NARROW, WIDE)


class TestCavityTransmission:
    def test_on_resonance_equals_peak(self):
        assert cavity_transmission(WIDE, 0.0) == pytest.approx(0.90)

    def test_half_maximum_at_half_fwhm(self):
        assert cavity_transmission(WIDE, 450e3) == pytest.approx(0.45)

    def test_far_detuned_value(self):
        # direct evaluation of the Lorentzian at 2.4 MHz
        assert cavity_transmission(WIDE, 2.4e6) == pytest.approx(0.0306, abs=5e-5)

    def test_even_in_detuning(self):
        d = np.array([0.1e6, 0.7e6, 3e6])
        assert np.allclose(cavity_transmission(WIDE, d), cavity_transmission(WIDE, -d))


class TestChainTransmission:
    def test_nominal_on_resonance(self):
        assert chain_transmission(NOMINAL, 0.0) == pytest.approx(0.66 * 0.90)

    def test_empty_chain_is_identity(self):
        for d in (0.0, 1e5, 2.4e6):
            assert chain_transmission((), d) == 1.0

    def test_nominal_at_zeeman_splitting(self):
        assert chain_transmission(NOMINAL, 2.4e6) == pytest.approx(3.81e-6, rel=2e-3)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.0, 1e7), st.floats(0.0, 1e7))
    def test_monotone_nonincreasing_in_abs_detuning(self, d1, d2):
        lo, hi = sorted((d1, d2))
        assert chain_transmission(NOMINAL, hi) <= chain_transmission(NOMINAL, lo) + 1e-15

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-1e7, 1e7))
    def test_even(self, d):
        assert chain_transmission(NOMINAL, d) == pytest.approx(
            chain_transmission(NOMINAL, -d), rel=1e-12)


class TestRelativeSuppression:
    def test_unity_on_resonance(self):
        assert relative_suppression(NOMINAL, 0.0) == 1.0

    def test_nominal_at_zeeman_splitting(self):
        # the Lorentzian product predicts 6.4e-6 where the measured value is 7e-6
        assert relative_suppression(NOMINAL, 2.4e6) == pytest.approx(6.42e-6, rel=2e-3)

    def test_with_polarization_extinction(self):
        combined = relative_suppression(NOMINAL, 2.4e6) * 1e-4
        assert combined == pytest.approx(6.4e-10, rel=5e-3)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-5e6, 5e6))
    def test_at_most_one(self, d):
        s = relative_suppression(NOMINAL, d)
        assert s <= 1.0
        # strict inequality once the detuning is resolvable in float64
        if abs(d) > 1.0:
            assert s < 1.0


class TestSampleDelay:
    def test_empty_chain_is_exactly_zero(self):
        rng = np.random.default_rng(0)
        assert sample_delay((), rng) == 0.0
        assert np.all(sample_delay((), rng, size=100) == 0.0)

    def test_mean_of_nominal_chain(self):
        rng = np.random.default_rng(42)
        d = sample_delay(NOMINAL, rng, size=1_000_000)
        expected = 1 / (2 * np.pi * 66e3) + 1 / (2 * np.pi * 900e3)
        assert expected == pytest.approx(2.59e-6, rel=2e-3)
        assert d.mean() == pytest.approx(expected, rel=0.01)
        assert d.min() >= 0.0

    def test_deterministic_given_seed(self):
        a = sample_delay(NOMINAL, np.random.default_rng(7), size=100)
        b = sample_delay(NOMINAL, np.random.default_rng(7), size=100)
        assert np.array_equal(a, b)

    def test_empirical_cdf_matches_hypoexponential(self):
        rng = np.random.default_rng(3)
        d = np.sort(sample_delay(NOMINAL, rng, size=1_000_000))
        emp = np.arange(1, d.size + 1) / d.size
        ks = np.max(np.abs(emp - delay_cdf(NOMINAL, d)))
        assert ks < 0.01

    def test_single_cavity_cdf_is_exponential(self):
        t = np.linspace(0, 1e-5, 50)
        rate = 2 * np.pi * 900e3
        assert np.allclose(delay_cdf((WIDE,), t), 1 - np.exp(-rate * t))

    def test_degenerate_chain_cdf_falls_back_to_convolution(self):
        pair = (WIDE, WIDE)
        t = np.linspace(0, 2e-6, 30)
        rate = 2 * np.pi * 900e3
        # Erlang(2) CDF for two identical stages
        expected = 1 - np.exp(-rate * t) * (1 + rate * t)
        assert np.allclose(delay_cdf(pair, t), expected, atol=2e-3)


def test_response_kernel_normalized_and_causal():
    k = response_kernel(NOMINAL, 5e-8)
    assert k.min() >= 0.0
    assert k.sum() == pytest.approx(1.0, abs=1e-6)
    # mean of the kernel approximates the mean chain delay
    mean = (np.arange(k.size) + 0.5) * 5e-8
    assert np.sum(mean * k) == pytest.approx(mean_total_delay(NOMINAL), rel=0.02)
