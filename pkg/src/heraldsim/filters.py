"""Cascaded spectral filter cavities.

Each triangular cavity is modeled as a single Lorentzian mode: transmission
T(d) = T_peak / (1 + (2 d / FWHM)^2). Besides frequency filtering, each
cavity delays a transmitted photon by an exponentially distributed ringdown
time with mean 1/(2 pi FWHM); that random delay is what erases which-atom
information and makes motional averaging work, so it is sampled explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import CavitySpec


@dataclass(frozen=True)
class FilterChain:
    cavities: tuple[CavitySpec, ...] = ()

    def __len__(self):
        return len(self.cavities)


def _as_chain(chain) -> tuple[CavitySpec, ...]:
    if isinstance(chain, FilterChain):
        return chain.cavities
    return tuple(chain)


def cavity_transmission(cavity: CavitySpec, detuning):
    """Lorentzian transmission of a single cavity at the given detuning (Hz)."""
    x = 2.0 * np.asarray(detuning, dtype=float) / cavity.fwhm
    return cavity.peak_transmission / (1.0 + x * x)


def chain_transmission(chain, detuning):
    """Product of member transmissions; identically 1 for an empty chain."""
    cavities = _as_chain(chain)
    out = np.ones_like(np.asarray(detuning, dtype=float))
    for cav in cavities:
        out = out * cavity_transmission(cav, detuning)
    return out if out.ndim else float(out)


def relative_suppression(chain, detuning):
    """Transmission at ``detuning`` normalized to the on-resonance value."""
    cavities = _as_chain(chain)
    if not cavities:
        return np.ones_like(np.asarray(detuning, dtype=float)) if np.ndim(detuning) else 1.0
    return chain_transmission(cavities, detuning) / chain_transmission(cavities, 0.0)


def delay_means(chain) -> np.ndarray:
    """Mean ringdown delay per cavity: 1/(2 pi FWHM), seconds."""
    cavities = _as_chain(chain)
    return np.array([1.0 / (2.0 * np.pi * c.fwhm) for c in cavities])


def mean_total_delay(chain) -> float:
    return float(delay_means(chain).sum())


def sample_delay(chain, rng: np.random.Generator, size=None):
    """Total random photon delay through the chain.

    Sum of independent exponential variates, one per cavity, each with mean
    equal to that cavity's intensity ringdown time. Empty chain: exactly 0.
    """
    means = delay_means(chain)
    if size is None:
        return float(sum(rng.exponential(m) for m in means)) if means.size else 0.0
    total = np.zeros(size, dtype=float)
    for m in means:
        total += rng.exponential(m, size=size)
    return total


def delay_cdf(chain, t):
    """CDF of the total chain delay (hypoexponential).

    Uses the closed form for pairwise-distinct rates; chains with repeated
    widths fall back to the exact phase-type survival probability.
    """
    t = np.asarray(t, dtype=float)
    means = delay_means(chain)
    if means.size == 0:
        return (t >= 0).astype(float)
    rates = 1.0 / means
    if means.size == 1:
        return np.where(t < 0, 0.0, -np.expm1(-rates[0] * np.maximum(t, 0.0)))
    distinct = np.min(np.abs(np.subtract.outer(rates, rates))[~np.eye(len(rates), dtype=bool)])
    if distinct > 1e-9 * rates.max():
        # F(t) = 1 - sum_i w_i exp(-r_i t), w_i = prod_{j!=i} r_j/(r_j - r_i)
        out = np.ones_like(t)
        for i, ri in enumerate(rates):
            w = 1.0
            for j, rj in enumerate(rates):
                if j != i:
                    w *= rj / (rj - ri)
            out = out - w * np.exp(-ri * np.maximum(t, 0.0))
        return np.where(t < 0, 0.0, np.clip(out, 0.0, 1.0))
    return _phase_type_cdf(rates, t)


def _phase_type_cdf(rates, t):
    # sum of exponentials = absorption time of a pure-birth chain
    from scipy.linalg import expm

    k = rates.size
    gen = np.zeros((k, k))
    gen[np.arange(k), np.arange(k)] = -rates
    gen[np.arange(k - 1), np.arange(1, k)] = rates[:-1]
    flat = np.atleast_1d(t).astype(float)
    out = np.empty_like(flat)
    for i, ti in enumerate(flat):
        out[i] = 0.0 if ti < 0 else 1.0 - expm(gen * ti)[0].sum()
    out = np.clip(out, 0.0, 1.0)
    return out.reshape(np.shape(t)) if np.ndim(t) else float(out[0])


def response_kernel(chain, dt: float, tail_sigmas: float = 12.0) -> np.ndarray:
    """Discrete causal impulse response of the chain delay on a uniform grid.

    Bin k holds the probability that the delay falls in [k*dt, (k+1)*dt);
    used to low-pass model curves for comparison with detected histograms
    (cavity build-up and ringdown smear arrival times).
    """
    means = delay_means(chain)
    if means.size == 0 or dt <= 0:
        return np.array([1.0])
    span = tail_sigmas * means.sum()
    n = max(int(np.ceil(span / dt)), 2)
    edges = np.arange(n + 1) * dt
    kernel = np.diff(delay_cdf(chain, edges))
    s = kernel.sum()
    return kernel / s if s > 0 else np.array([1.0])
