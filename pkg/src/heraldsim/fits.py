"""Forward models and nonlinear fits for the read-out analysis.

Three model families:

* the temporal shape of detected read photons (retrieval of collective
  excitations plus four-wave-mixing noise, drive leakage and background),
* exponential decays of retrieval efficiency and cross-correlation versus
  write-read delay,
* the spectral decomposition of filter-resonance scans (narrow peak,
  broad pedestal, drive leakage, flat background).

All fits are weighted trust-region least squares with bounds and a small
deterministic multi-start to dodge the usual exponential-fit local minima.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import filters
from .timeseries import TimeSeries

# series branch for (exp(z)-1)/z below this exponent magnitude
DEGENERACY_THRESHOLD = 1e-6


class ConvergenceError(RuntimeError):
    """A fit failed to converge (or sits on a parameter bound)."""


class CoverageError(ValueError):
    """Evaluation time outside the supplied time-series coverage."""


# --- shape model rate functions (shared with the simulator) -------------------


def _phi(z):
    """(exp(z) - 1) / z, with the series limit through z = 0.

    The explicit form degenerates when the FWM gain and retrieval loss
    cancel (coupling ratio -> 1); the quadratic series keeps the model
    continuous across that point.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < DEGENERACY_THRESHOLD
    zs = z[small]
    out[small] = 1.0 + zs / 2.0 + zs * zs / 6.0
    zb = z[~small]
    with np.errstate(over="ignore"):
        out[~small] = np.expm1(zb) / zb
    return out


def _exponent(chi_r, alpha, omega_sq, t, t1):
    f = np.exp(-np.asarray(t, dtype=float) / t1)
    return (np.square(alpha) - 1.0) * chi_r * chi_r * omega_sq * f * t, f


def retrieval_hazard(chi_r, alpha, omega_sq, t, t1):
    """Per-excitation conversion rate (1/s): first shape-model term at n_ce=1."""
    z, f = _exponent(chi_r, alpha, omega_sq, t, t1)
    return chi_r * chi_r * omega_sq * f * np.exp(z)


def fwm_noise_rate(chi_r, alpha, omega_sq, t, t1):
    """Four-wave-mixing photon rate (1/s): second shape-model term."""
    z, f = _exponent(chi_r, alpha, omega_sq, t, t1)
    chi2 = chi_r * chi_r
    return chi2 * chi2 * np.square(alpha) * np.square(omega_sq) * t * f * f * _phi(z)


# --- domain types --------------------------------------------------------------


@dataclass(frozen=True)
class ShapeModelParams:
    chi_r: float
    alpha_of_t: TimeSeries
    omega_sq_of_t: TimeSeries
    T1: float
    n_ce: float
    L0: float = 0.0
    L1: float = 0.0
    BG: float = 0.0

    def coverage(self) -> tuple[float, float]:
        lo = max(self.alpha_of_t.t[0], self.omega_sq_of_t.t[0])
        hi = min(self.alpha_of_t.t[-1], self.omega_sq_of_t.t[-1])
        return lo, hi


@dataclass
class DecayFitResult:
    amplitude: float
    tau: float
    offset: float
    amplitude_err: float
    tau_err: float
    report: "FitReport"


@dataclass
class ScanFit:
    peak_amplitude: float
    pedestal_amplitude: float
    pedestal_width: float
    leakage_amplitude: float
    background: float
    leakage_center: float
    write_efficiency: float
    write_efficiency_err: float = math.nan
    stderr: dict = field(default_factory=dict)
    report: "FitReport | None" = None


@dataclass(frozen=True)
class BinnedSeries:
    """Histogrammed rates: bin centers (s), rate per trial (counts/s), stderr."""

    t: np.ndarray
    y: np.ndarray
    yerr: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, float)
        y = np.asarray(self.y, float)
        e = np.asarray(self.yerr, float)
        if not (t.shape == y.shape == e.shape) or t.ndim != 1:
            raise ValueError("t, y, yerr must be matching 1-d arrays")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "yerr", e)


@dataclass(frozen=True)
class SpectralScan:
    """Counts-per-pulse versus filter detuning."""

    detunings_hz: np.ndarray
    counts_per_pulse: np.ndarray
    stderr: np.ndarray

    @classmethod
    def from_counts(cls, detunings_hz, counts, n_pulses) -> "SpectralScan":
        detunings_hz = np.asarray(detunings_hz, float)
        counts = np.asarray(counts, float)
        n_pulses = np.broadcast_to(np.asarray(n_pulses, float), counts.shape)
        stderr = np.sqrt(np.maximum(counts, 1.0)) / n_pulses
        return cls(detunings_hz, counts / n_pulses, stderr)


@dataclass
class FitReport:
    model: str
    params: dict
    stderr: dict
    covariance: list
    objective: float
    n_iterations: int
    success: bool
    message: str
    grad_norm: float = math.nan

    def to_json(self, **extra) -> str:
        doc = {
            "model": self.model,
            "params": self.params,
            "stderr": self.stderr,
            "covariance": self.covariance,
            "objective": self.objective,
            "n_iterations": self.n_iterations,
            "success": self.success,
            "message": self.message,
            "grad_norm": self.grad_norm,
        }
        doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True)


# --- shape model evaluation -----------------------------------------------------


def _check_coverage(params: ShapeModelParams, t):
    lo, hi = params.coverage()
    t = np.asarray(t, dtype=float)
    if t.size and (t.min() < lo - 1e-12 or t.max() > hi + 1e-12):
        raise CoverageError(
            f"t in [{t.min():.3g}, {t.max():.3g}] outside covered window [{lo:.3g}, {hi:.3g}]"
        )


def shape_forward(params: ShapeModelParams, t):
    """Detected rate (counts/s) of the full shape model at time ``t``."""
    _check_coverage(params, t)
    t = np.asarray(t, dtype=float)
    alpha = params.alpha_of_t(t)
    omega_sq = params.omega_sq_of_t(t)
    retrieval = params.n_ce * retrieval_hazard(params.chi_r, alpha, omega_sq, t, params.T1)
    fwm = fwm_noise_rate(params.chi_r, alpha, omega_sq, t, params.T1)
    leak = (params.L0 + params.L1 * t) * omega_sq
    total = retrieval + fwm + leak + params.BG
    return total if total.ndim else float(total)


def shape_integrate(params: ShapeModelParams, tau_r: float, t_start: float = 0.0) -> float:
    """Mean detected photons in [t_start, tau_r] by adaptive quadrature."""
    _check_coverage(params, np.array([t_start, tau_r]))
    if tau_r <= t_start:
        return 0.0
    bp = np.unique(np.concatenate([
        params.alpha_of_t.breakpoints, params.omega_sq_of_t.breakpoints]))
    interior = [float(b) for b in bp if t_start < b < tau_r]
    val, _ = integrate.quad(
        lambda x: shape_forward(params, np.array([x]))[0],
        t_start, tau_r, points=interior or None, limit=200, epsabs=1e-300, epsrel=1e-11,
    )
    return float(val)


# --- generic fitting helpers -----------------------------------------------------


def _run_least_squares(model_name, residual, x0_list, bounds, names, jac=None,
                       max_nfev=2000):
    best = None
    for x0 in x0_list:
        x0 = np.clip(np.asarray(x0, dtype=float), bounds[0], bounds[1])
        try:
            res = optimize.least_squares(
                residual, x0, jac=jac if jac is not None else "2-point",
                bounds=bounds, x_scale="jac", max_nfev=max_nfev, method="trf",
            )
        except Exception:
            continue
        if res.status <= 0:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise ConvergenceError(f"{model_name}: no start converged")
    cov = _covariance(best.jac)
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    report = FitReport(
        model=model_name,
        params={n: float(v) for n, v in zip(names, best.x)},
        stderr={n: float(s) for n, s in zip(names, stderr)},
        covariance=cov.tolist(),
        objective=float(2.0 * best.cost),
        n_iterations=int(best.nfev),
        success=True,
        message=str(best.message),
        grad_norm=float(np.max(np.abs(best.grad))) if best.grad is not None else math.nan,
    )
    return best, cov, report


def _covariance(jac: np.ndarray) -> np.ndarray:
    # residuals are whitened, so cov = (J^T J)^-1
    jtj = jac.T @ jac
    try:
        return np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(jtj)


# --- exponential decay fits -------------------------------------------------------


def fit_exp_decay(points, model: str = "pure") -> DecayFitResult:
    """Weighted exponential fit of (delay, value, stderr) points.

    model='pure':   y = A exp(-t/tau)          (retrieval efficiency decay)
    model='offset': y = 1 + C exp(-t/tau)      (cross-correlation decay)
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be (n, 3): delay, value, stderr")
    if pts.shape[0] < 3:
        raise ValueError("need at least 3 points")
    t, y, sigma = pts[:, 0], pts[:, 1], pts[:, 2]
    if np.any(sigma <= 0):
        raise ValueError("stderr must be > 0")
    if model not in ("pure", "offset"):
        raise ValueError(f"unknown decay model {model!r}")
    offset = 0.0 if model == "pure" else 1.0

    def residual(x):
        a, tau = x
        return (offset + a * np.exp(-t / tau) - y) / sigma

    def jac(x):
        a, tau = x
        e = np.exp(-t / tau)
        return np.column_stack([e / sigma, a * e * t / (tau * tau) / sigma])

    # crude log-linear initialization on the positive part of the signal
    signal = y - offset
    pos = signal > 0
    if pos.sum() >= 2:
        slope, intercept = np.polyfit(t[pos], np.log(signal[pos]), 1)
        tau0 = -1.0 / slope if slope < 0 else (t.max() - t.min() + 1e-30)
        a0 = float(np.exp(intercept))
    else:
        tau0 = (t.max() - t.min()) / 2.0 + 1e-30
        a0 = float(signal[np.argmin(t)])
    tau_lo = 1e-6 * max(t.max(), 1e-30)
    starts = [(a0, tau0 * s) for s in (1.0, 0.5, 2.0, 0.25, 4.0)]
    bounds = (np.array([-np.inf, tau_lo]), np.array([np.inf, np.inf]))
    best, cov, report = _run_least_squares(
        f"exp-decay-{model}", residual, starts, bounds, ("amplitude", "tau"), jac=jac)
    a_fit, tau_fit = best.x
    if tau_fit <= tau_lo * 1.01:
        raise ConvergenceError("tau collapsed to its lower bound")
    return DecayFitResult(
        amplitude=float(a_fit), tau=float(tau_fit), offset=offset,
        amplitude_err=report.stderr["amplitude"], tau_err=report.stderr["tau"],
        report=report,
    )


# --- read photon shape fit ---------------------------------------------------------


@dataclass
class ChiFitResult:
    chi_r: float
    stderr: float
    report: FitReport


def _difference_model(chi_r, n_ce, fixed: ShapeModelParams, t):
    alpha = fixed.alpha_of_t(t)
    omega_sq = fixed.omega_sq_of_t(t)
    return n_ce * retrieval_hazard(chi_r, alpha, omega_sq, t, fixed.T1)


def _difference_jac(chi_r, n_ce, fixed: ShapeModelParams, t):
    alpha = fixed.alpha_of_t(t)
    omega_sq = fixed.omega_sq_of_t(t)
    z, f = _exponent(chi_r, alpha, omega_sq, t, fixed.T1)
    base = omega_sq * f * np.exp(z)
    # d/dchi [chi^2 * base(chi)] with z proportional to chi^2
    return n_ce * base * 2.0 * chi_r * (1.0 + z)


def fit_chi_r(binned_with_write, binned_without_write,
              fixed: ShapeModelParams, n_ce_heralded: float | None = None,
              edge_exclusion: float = 25e-6) -> ChiFitResult:
    """Fit the retrieval coupling from with-write minus without-write rates.

    ``binned_with_write`` is either the unconditional BinnedSeries or a pair
    (unconditional, heralded); heralded data share all parameters except the
    excitation number, which is ``fixed.n_ce`` for the unconditional data and
    ``n_ce_heralded`` for the heralded data. ``binned_without_write`` is the
    matching reference (a single series, or a pair when the two with-write
    series use different binnings). The first and last ``edge_exclusion`` of
    the data span are excluded to avoid transients.
    """
    if isinstance(binned_with_write, BinnedSeries):
        series = [(binned_with_write, fixed.n_ce)]
    else:
        uncond, herald = binned_with_write
        if n_ce_heralded is None:
            raise ValueError("n_ce_heralded required when fitting heralded data")
        series = [(uncond, fixed.n_ce), (herald, n_ce_heralded)]
    if isinstance(binned_without_write, BinnedSeries):
        without = [binned_without_write] * len(series)
    else:
        without = list(binned_without_write)
        if len(without) != len(series):
            raise ValueError("need one without-write series per with-write series")

    datasets = []
    for (s, n_ce), w in zip(series, without):
        if s.t.shape != w.t.shape or not np.allclose(s.t, w.t):
            raise ValueError("with/without-write data must share one binning grid")
        lo = s.t.min() + edge_exclusion
        hi = s.t.max() - edge_exclusion
        m = (s.t >= lo) & (s.t <= hi)
        if m.sum() < 2:
            raise ValueError("edge exclusion leaves too few bins")
        diff = s.y[m] - w.y[m]
        err = np.hypot(s.yerr[m], w.yerr[m])
        err = np.where(err > 0, err, np.max(err[err > 0]) if np.any(err > 0) else 1.0)
        datasets.append((s.t[m], diff, err, n_ce))

    def residual(x):
        chi = x[0]
        return np.concatenate([
            (_difference_model(chi, n_ce, fixed, t) - diff) / err
            for t, diff, err, n_ce in datasets
        ])

    def jac(x):
        chi = x[0]
        return np.concatenate([
            _difference_jac(chi, n_ce, fixed, t) / err
            for t, diff, err, n_ce in datasets
        ])[:, None]

    # moment-matched start: chi^2 ~ diff / (omega^2 f n_ce)
    t0, diff0, _, n0 = datasets[0]
    f0 = np.exp(-t0 / fixed.T1)
    denom = fixed.omega_sq_of_t(t0) * f0 * n0
    ratio = diff0[denom > 0] / denom[denom > 0]
    chi0 = math.sqrt(max(float(np.median(ratio)), 1e-12)) if ratio.size else 1.0
    starts = [(chi0 * s,) for s in (1.0, 0.3, 3.0, 0.1, 10.0)]
    bounds = (np.array([0.0]), np.array([np.inf]))
    best, cov, report = _run_least_squares(
        "chi-r-difference", residual, starts, bounds, ("chi_r",), jac=jac)
    return ChiFitResult(chi_r=float(best.x[0]), stderr=report.stderr["chi_r"],
                        report=report)


# --- shape decomposition ------------------------------------------------------------


@dataclass
class ShapeDecomposition:
    bin_centers: np.ndarray
    retrieval: np.ndarray
    fwm: np.ndarray
    noise: np.ndarray
    total: np.ndarray
    residual: np.ndarray | None = None


def decompose_shape(params: ShapeModelParams, bin_edges, chain=None,
                    data=None, oversample: int = 20) -> ShapeDecomposition:
    """Per-bin stacked model components, low-pass filtered by the chain response.

    Components are the retrieval, FWM, and leakage+background terms of the
    shape model, each convolved with the filter-cavity delay response to
    account for build-up and ringdown; ``residual`` is data minus the summed
    model when per-bin data is supplied.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin_edges must be increasing with at least two entries")
    _check_coverage(params, edges)
    n_bins = edges.size - 1
    dt = float(np.min(np.diff(edges))) / oversample
    grid = np.arange(edges[0], edges[-1] + dt / 2, dt)

    alpha = params.alpha_of_t(grid)
    omega_sq = params.omega_sq_of_t(grid)
    comps = {
        "retrieval": params.n_ce * retrieval_hazard(params.chi_r, alpha, omega_sq,
                                                    grid, params.T1),
        "fwm": fwm_noise_rate(params.chi_r, alpha, omega_sq, grid, params.T1),
        "noise": (params.L0 + params.L1 * grid) * omega_sq + params.BG,
    }
    if chain is not None and len(filters._as_chain(chain)):
        kernel = filters.response_kernel(chain, dt)
        for k in ("retrieval", "fwm", "noise"):
            comps[k] = np.convolve(comps[k], kernel)[: grid.size]

    idx = np.clip(np.searchsorted(edges, grid, side="right") - 1, 0, n_bins - 1)
    binned = {}
    counts = np.bincount(idx, minlength=n_bins)
    for k, v in comps.items():
        binned[k] = np.bincount(idx, weights=v, minlength=n_bins) / np.maximum(counts, 1)
    total = binned["retrieval"] + binned["fwm"] + binned["noise"]
    residual = None
    if data is not None:
        data = np.asarray(data, dtype=float)
        if data.shape != (n_bins,):
            raise ValueError("data must have one value per bin")
        residual = data - total
    return ShapeDecomposition(
        bin_centers=0.5 * (edges[:-1] + edges[1:]),
        retrieval=binned["retrieval"], fwm=binned["fwm"], noise=binned["noise"],
        total=total, residual=residual,
    )


# --- spectral scan model and fit ------------------------------------------------------


def _pedestal_line(delta, width):
    x = 2.0 * np.asarray(delta, dtype=float) / width
    return 1.0 / (1.0 + x * x)


def scan_forward(fit: ScanFit, chain, delta_hz):
    """Model counts/pulse at filter detuning ``delta_hz``."""
    delta = np.asarray(delta_hz, dtype=float)
    out = (fit.peak_amplitude * filters.relative_suppression(chain, delta)
           + fit.pedestal_amplitude * _pedestal_line(delta, fit.pedestal_width)
           + fit.background)
    if fit.leakage_amplitude:
        out = out + fit.leakage_amplitude * filters.relative_suppression(
            chain, delta - fit.leakage_center)
    return out if out.ndim else float(out)


def fit_scan(scan: SpectralScan, scan_kind: str, chain,
             zeeman_splitting: float = 2.4e6) -> ScanFit:
    """Decompose a filter scan into peak, pedestal, leakage and background.

    scan_kind selects the drive-leakage line position: 'write' scans sit one
    Zeeman splitting above the write drive (leakage fixed to zero there,
    since polarization filtering fully suppresses it); 'read' and
    'read-no-write' scans have the drive one splitting above the reference.
    The write efficiency is the narrow-peak share of (peak + pedestal) at
    zero detuning.
    """
    if scan_kind not in ("write", "read", "read-no-write"):
        raise ValueError(f"unknown scan kind {scan_kind!r}")
    delta = np.asarray(scan.detunings_hz, dtype=float)
    y = np.asarray(scan.counts_per_pulse, dtype=float)
    sigma = np.asarray(scan.stderr, dtype=float)
    if delta.size < 6:
        raise ValueError("need at least 6 scan points")
    if np.unique(delta).size < 4:
        raise ValueError("degenerate design: too few distinct detunings")
    sigma = np.where(sigma > 0, sigma, np.max(sigma) if np.any(sigma > 0) else 1.0)

    with_leak = scan_kind != "write"
    center = zeeman_splitting if scan_kind.startswith("read") else -zeeman_splitting
    names = ["peak_amplitude", "pedestal_amplitude", "pedestal_width"] \
        + (["leakage_amplitude"] if with_leak else []) + ["background"]

    def unpack(x):
        if with_leak:
            peak, ped, width, leak, bg = x
        else:
            peak, ped, width, bg = x
            leak = 0.0
        return peak, ped, width, leak, bg

    def model(x):
        peak, ped, width, leak, bg = unpack(x)
        m = (peak * filters.relative_suppression(chain, delta)
             + ped * _pedestal_line(delta, width) + bg)
        if with_leak:
            m = m + leak * filters.relative_suppression(chain, delta - center)
        return m

    def residual(x):
        return (model(x) - y) / sigma

    bg0 = max(float(y.min()), 0.0)
    i0 = int(np.argmin(np.abs(delta)))
    amp0 = max(float(y[i0]) - bg0, 1e-12)
    width0 = max(float(np.max(np.abs(delta))) / 2.0, 1e3)
    starts = []
    for f_peak, f_width in ((0.6, 1.0), (0.8, 0.3), (0.3, 3.0), (0.5, 1.0), (0.9, 0.5)):
        x0 = [amp0 * f_peak, amp0 * (1.0 - f_peak), width0 * f_width]
        if with_leak:
            x0.append(amp0 * 0.2)
        x0.append(bg0 + 1e-12)
        starts.append(x0)
    n_par = len(names)
    bounds = (np.zeros(n_par), np.full(n_par, np.inf))
    bounds[0][2] = 1.0  # pedestal width cannot collapse to zero
    best, cov, report = _run_least_squares("scan", residual, starts, bounds, names)

    peak, ped, width, leak, bg = unpack(best.x)
    total = peak + ped
    w_eff = peak / total if total > 0 else math.nan
    # delta method on w = p/(p+q)
    i_p, i_q = names.index("peak_amplitude"), names.index("pedestal_amplitude")
    gp = ped / total**2 if total > 0 else 0.0
    gq = -peak / total**2 if total > 0 else 0.0
    var_w = (gp * gp * cov[i_p, i_p] + gq * gq * cov[i_q, i_q]
             + 2.0 * gp * gq * cov[i_p, i_q])
    return ScanFit(
        peak_amplitude=float(peak), pedestal_amplitude=float(ped),
        pedestal_width=float(width), leakage_amplitude=float(leak),
        background=float(bg), leakage_center=float(center),
        write_efficiency=float(w_eff),
        write_efficiency_err=float(math.sqrt(max(var_w, 0.0))),
        stderr=dict(report.stderr), report=report,
    )
