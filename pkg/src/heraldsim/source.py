"""Generative Monte Carlo model of the heralded photon source.

One trial is a write/read cycle: a weak write pulse scatters a thermal
number of photons into the cell cavity mode, each photon heralding either a
long-lived symmetric collective excitation or a short-lived asymmetric one;
the spin wave decays over the write-read delay; the read pulse converts
surviving symmetric excitations into photons while simultaneously producing
four-wave-mixing noise, drive leakage and dark counts. Detected clicks carry
a random filter-cavity delay (the motional-averaging mechanism).

All rates in the read window follow the shape model in ``heraldsim.fits``
(retrieval and FWM terms); the simulator and the fitting code share those
rate functions, so fits against simulated data are self-consistent.

Trials are generated in fixed-size chunks; every chunk and sampling stage
owns a counter-based Philox stream keyed by (master_seed, chunk, stage),
which makes the output deterministic and independent of thread scheduling.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import assembly, filters
from .config import ExperimentConfig
from .fits import fwm_noise_rate, retrieval_hazard

CHUNK_SIZE = 1 << 16
FORMAT_NAME = "heraldsim-clicks-v1"

# sampling stages; each gets its own Philox stream per chunk
_S_THERMAL, _S_TYPE, _S_EMIT, _S_WDELAY, _S_WDET = 1, 2, 3, 4, 5
_S_SURV, _S_CONV, _S_RDELAY, _S_RDET = 6, 7, 8, 9
_S_FWM_N, _S_FWM_T, _S_FWM_DELAY, _S_FWM_DET = 10, 11, 12, 13
_S_LEAK_N, _S_LEAK_T, _S_LEAK_DELAY = 14, 15, 16
_S_DARK_N, _S_DARK_T = 17, 18


@dataclass
class SpinWaveState:
    n_symmetric: int
    n_asymmetric: int
    creation_time: float = 0.0


@dataclass
class TrialRecord:
    trial_index: int
    delay: float
    write_clicks: np.ndarray
    read_clicks: np.ndarray


def _stage_rng(seed: int, chunk: int, stage: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64((chunk << 8) | stage)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def heralded_mean_excitations(mu_detected_mean: float, thermal_mean: float) -> float:
    """Expected excitation number conditioned on at least one write click.

    Bayes over a thermal prior with mean ``thermal_mean`` and binomial
    detection whose per-excitation click probability is
    ``mu_detected_mean / thermal_mean``. Reduces to 1 + thermal_mean for
    unit detection efficiency.
    """
    if mu_detected_mean <= 0 or thermal_mean <= 0:
        raise ValueError("means must be positive")
    eta = mu_detected_mean / thermal_mean
    if eta > 1.0 + 1e-12:
        raise ValueError("detected mean cannot exceed the thermal mean")
    eta = min(eta, 1.0)
    d = 1.0 + thermal_mean * eta
    x = 1.0 - eta
    return (d * d - x) / (d * eta)


# --- precomputed per-config read model ---------------------------------------


class _ReadModel:
    """Rate grids over the read window for one config (shared by all trials)."""

    def __init__(self, config: ExperimentConfig, n_grid: int = 4096):
        self.config = config
        rd = config.read_duration
        self.t = np.linspace(0.0, rd, n_grid + 1)
        self.dt = self.t[1] - self.t[0]
        chi = config.fwm_couplings.chi_r
        alpha = config.fwm_couplings.alpha_table(self.t)
        omega_sq = config.drive_profile(self.t)
        t1 = config.population_decay

        self.hazard = retrieval_hazard(chi, alpha, omega_sq, self.t, t1)
        self.cum_hazard = _cumtrapz(self.hazard, self.t)
        self.total_hazard = float(self.cum_hazard[-1])

        self.fwm = fwm_noise_rate(chi, alpha, omega_sq, self.t, t1)
        self.cum_fwm = _cumtrapz(self.fwm, self.t)
        self.total_fwm = float(self.cum_fwm[-1])

        # leakage splits into a delay-dependent and a window-time part:
        # rate(t; tau_d) = (l0 + l1*(tau_d + t)) * omega_sq(t)
        self.cum_omega = _cumtrapz(omega_sq, self.t)
        self.cum_t_omega = _cumtrapz(self.t * omega_sq, self.t)

        supp = filters.relative_suppression(config.filter_chain, config.filter_detuning)
        self.p_detect = config.detection_chain_efficiency * float(supp)
        # read drive sits one Zeeman splitting above the scan reference
        nu_z = config.zeeman_splitting
        num = filters.relative_suppression(config.filter_chain, config.filter_detuning - nu_z)
        den = filters.relative_suppression(config.filter_chain, nu_z)
        self.leak_factor = float(num / den) if den > 0 else 1.0

    def leak_cumulative(self, delay: float) -> np.ndarray:
        lc = self.config.leakage_coeffs
        return ((lc.l0 + lc.l1 * delay) * self.cum_omega + lc.l1 * self.cum_t_omega) * self.leak_factor

    def convert(self, u: np.ndarray):
        """Map uniforms to conversion times; returns (mask, times[mask])."""
        exc = -np.log1p(-u)
        mask = exc < self.total_hazard
        times = np.interp(exc[mask], self.cum_hazard, self.t)
        return mask, times

    def fwm_times(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u * self.total_fwm, self.cum_fwm, self.t)

    def leak_times(self, u: np.ndarray, delay: float) -> np.ndarray:
        cum = self.leak_cumulative(delay)
        return np.interp(u * cum[-1], cum, self.t)


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x), out=out[1:])
    return out


_MODEL_CACHE: dict[str, _ReadModel] = {}


def _read_model(config: ExperimentConfig) -> _ReadModel:
    key = config.sha256()
    model = _MODEL_CACHE.get(key)
    if model is None:
        model = _ReadModel(config)
        if len(_MODEL_CACHE) > 16:
            _MODEL_CACHE.clear()
        _MODEL_CACHE[key] = model
    return model


def _write_detect_probs(config: ExperimentConfig) -> tuple[float, float]:
    """Per-photon click probabilities for (symmetric, asymmetric) write photons."""
    eta = config.detection_chain_efficiency
    supp = float(filters.relative_suppression(config.filter_chain, config.filter_detuning))
    x = 2.0 * config.filter_detuning / config.pedestal_width
    pedestal_line = 1.0 / (1.0 + x * x)
    return eta * supp, eta * config.pedestal_pass_fraction * pedestal_line


def expected_write_click_mean(config: ExperimentConfig) -> float:
    """Analytic mean detected write clicks per trial (dead time ignored)."""
    p_sym, p_asym = _write_detect_probs(config)
    eps = config.write_efficiency
    return config.mean_write_excitations * (eps * p_sym + (1.0 - eps) * p_asym)


# --- batch simulation ---------------------------------------------------------


@dataclass
class ClickBatch:
    """Column-oriented trial records: ragged click arrays plus offsets."""

    delays: np.ndarray
    write_offsets: np.ndarray
    write_times: np.ndarray
    read_offsets: np.ndarray
    read_times: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_trials(self) -> int:
        return self.delays.size

    def __len__(self) -> int:
        return self.n_trials

    def __iter__(self):
        return self.records()

    def records(self):
        for i in range(self.n_trials):
            yield TrialRecord(
                trial_index=i,
                delay=float(self.delays[i]),
                write_clicks=self.write_times[self.write_offsets[i]:self.write_offsets[i + 1]],
                read_clicks=self.read_times[self.read_offsets[i]:self.read_offsets[i + 1]],
            )

    def take(self, indices) -> "ClickBatch":
        indices = np.asarray(indices, dtype=np.int64)
        w_off, w_t = _gather_ragged(self.write_offsets, self.write_times, indices)
        r_off, r_t = _gather_ragged(self.read_offsets, self.read_times, indices)
        return ClickBatch(self.delays[indices], w_off, w_t, r_off, r_t, dict(self.meta))

    @classmethod
    def concat(cls, batches) -> "ClickBatch":
        batches = list(batches)
        meta = dict(batches[0].meta)
        meta.pop("delay_s", None)
        return cls(
            delays=np.concatenate([b.delays for b in batches]),
            write_offsets=_concat_offsets([b.write_offsets for b in batches]),
            write_times=np.concatenate([b.write_times for b in batches]),
            read_offsets=_concat_offsets([b.read_offsets for b in batches]),
            read_times=np.concatenate([b.read_times for b in batches]),
            meta=meta,
        )

    def to_jsonl(self, path, manifest_path: str | None = None) -> None:
        header = dict(self.meta)
        header["format"] = FORMAT_NAME
        header["n_trials"] = int(self.n_trials)
        if manifest_path is not None:
            header["manifest"] = str(manifest_path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for rec in self.records():
                fh.write(json.dumps({
                    "trial": rec.trial_index,
                    "delay_s": rec.delay,
                    "write_clicks_s": [float(t) for t in rec.write_clicks],
                    "read_clicks_s": [float(t) for t in rec.read_clicks],
                }) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "ClickBatch":
        delays, w_counts, w_times, r_counts, r_times = [], [], [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format") != FORMAT_NAME:
                raise ValueError(f"not a {FORMAT_NAME} file: {path}")
            for line in fh:
                rec = json.loads(line)
                delays.append(rec["delay_s"])
                w = rec["write_clicks_s"]
                r = rec["read_clicks_s"]
                w_counts.append(len(w))
                r_counts.append(len(r))
                w_times.extend(w)
                r_times.extend(r)
        meta = {k: v for k, v in header.items() if k not in ("format", "n_trials")}
        n = len(delays)
        w_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(w_counts, out=w_off[1:])
        r_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(r_counts, out=r_off[1:])
        return cls(np.asarray(delays, dtype=float), w_off,
                   np.asarray(w_times, dtype=float), r_off,
                   np.asarray(r_times, dtype=float), meta)


def _gather_ragged(offsets, times, indices):
    lens = np.diff(offsets)[indices]
    out_off = np.zeros(indices.size + 1, dtype=np.int64)
    np.cumsum(lens, out=out_off[1:])
    total = int(out_off[-1])
    if total == 0:
        return out_off, np.empty(0, dtype=float)
    pos = (np.arange(total, dtype=np.int64)
           - np.repeat(out_off[:-1], lens)
           + np.repeat(offsets[:-1][indices], lens))
    return out_off, times[pos]


def _concat_offsets(offset_list):
    parts = [offset_list[0]]
    for off in offset_list[1:]:
        parts.append(off[1:] + parts[-1][-1])
    return np.concatenate(parts)


def default_windows(config: ExperimentConfig, tau_r: float = 40e-6):
    """Analysis windows: full write pulse plus the filter-delay tail, and [0, tau_r)."""
    tail = 8.0 * filters.mean_total_delay(config.filter_chain)
    write_window = (0.0, config.write_duration + tail)
    read_window = (0.0, min(tau_r, config.read_duration))
    return write_window, read_window


def _simulate_chunk(config: ExperimentConfig, model: _ReadModel, seed: int,
                    chunk: int, size: int):
    mu = config.mean_write_excitations
    p_sym_det, p_asym_det = _write_detect_probs(config)
    chain = config.filter_chain
    dead = config.detector_dead_time

    # write photons: thermal total, binomial symmetric/asymmetric split
    if mu > 0:
        n_tot = _stage_rng(seed, chunk, _S_THERMAL).geometric(1.0 / (1.0 + mu), size) - 1
    else:
        n_tot = np.zeros(size, dtype=np.int64)
    n_phot = int(n_tot.sum())
    trial_of_phot = np.repeat(np.arange(size, dtype=np.int64), n_tot)
    is_sym = _stage_rng(seed, chunk, _S_TYPE).random(n_phot) < config.write_efficiency
    t_emit = _stage_rng(seed, chunk, _S_EMIT).random(n_phot) * config.write_duration
    w_delay = filters.sample_delay(chain, _stage_rng(seed, chunk, _S_WDELAY), size=n_phot)
    u_det = _stage_rng(seed, chunk, _S_WDET).random(n_phot)
    kept = u_det < np.where(is_sym, p_sym_det, p_asym_det)
    w_click_times = (t_emit + w_delay)[kept]
    w_click_counts = np.bincount(trial_of_phot[kept], minlength=size).astype(np.int64)
    write_offsets, write_times = assembly.assemble_trials(
        size, dead, w_click_counts[None, :], w_click_times)

    n_sym = np.bincount(trial_of_phot[is_sym], minlength=size).astype(np.int64)

    # spin-wave decay over the write-read delay
    delay = config.write_read_delay
    p_surv = np.exp(-delay / config.spin_wave_lifetime)
    n_surv = _stage_rng(seed, chunk, _S_SURV).binomial(n_sym, p_surv)

    # retrieval: at most one photon per excitation, hazard from the shape model
    n_exc = int(n_surv.sum())
    trial_of_exc = np.repeat(np.arange(size, dtype=np.int64), n_surv)
    u_conv = _stage_rng(seed, chunk, _S_CONV).random(n_exc)
    conv_mask, conv_t = model.convert(u_conv)
    conv_trials = trial_of_exc[conv_mask]
    conv_delay = filters.sample_delay(chain, _stage_rng(seed, chunk, _S_RDELAY),
                                      size=conv_t.size)
    u_rdet = _stage_rng(seed, chunk, _S_RDET).random(conv_t.size)
    rkeep = u_rdet < model.p_detect
    ret_times = (conv_t + conv_delay)[rkeep]
    ret_counts = np.bincount(conv_trials[rkeep], minlength=size).astype(np.int64)

    # four-wave mixing: inhomogeneous Poisson, independent of the spin wave
    n_fwm = _stage_rng(seed, chunk, _S_FWM_N).poisson(model.total_fwm, size)
    n_f = int(n_fwm.sum())
    fwm_trials = np.repeat(np.arange(size, dtype=np.int64), n_fwm)
    fwm_t = model.fwm_times(_stage_rng(seed, chunk, _S_FWM_T).random(n_f))
    fwm_delay = filters.sample_delay(chain, _stage_rng(seed, chunk, _S_FWM_DELAY), size=n_f)
    u_fdet = _stage_rng(seed, chunk, _S_FWM_DET).random(n_f)
    fkeep = u_fdet < model.p_detect
    fwm_times_det = (fwm_t + fwm_delay)[fkeep]
    fwm_counts = np.bincount(fwm_trials[fkeep], minlength=size).astype(np.int64)

    # read drive leakage: detected-level rate, grows with the write-read delay
    leak_cum = model.leak_cumulative(delay)
    n_leak = _stage_rng(seed, chunk, _S_LEAK_N).poisson(float(leak_cum[-1]), size)
    n_l = int(n_leak.sum())
    leak_t = model.leak_times(_stage_rng(seed, chunk, _S_LEAK_T).random(n_l), delay)
    leak_delay = filters.sample_delay(chain, _stage_rng(seed, chunk, _S_LEAK_DELAY), size=n_l)
    leak_times = leak_t + leak_delay
    leak_counts = n_leak.astype(np.int64)

    # dark counts: homogeneous over the read window, no filter delay
    n_dark = _stage_rng(seed, chunk, _S_DARK_N).poisson(
        config.dark_rate * config.read_duration, size)
    n_d = int(n_dark.sum())
    dark_times = _stage_rng(seed, chunk, _S_DARK_T).random(n_d) * config.read_duration
    dark_counts = n_dark.astype(np.int64)

    read_counts = np.stack([ret_counts, fwm_counts, leak_counts, dark_counts])
    read_flat = np.concatenate([ret_times, fwm_times_det, leak_times, dark_times])
    read_offsets, read_times = assembly.assemble_trials(size, dead, read_counts, read_flat)

    return write_offsets, write_times, read_offsets, read_times


def simulate(config: ExperimentConfig, trials: int, master_seed: int | None = None,
             threads: int = 1) -> ClickBatch:
    """Generate ``trials`` write/read trial records.

    Deterministic given (config, trials, master_seed): trial chunks draw from
    counter-based Philox streams keyed by (master_seed, chunk, stage), and
    output order is by trial index regardless of scheduling.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = config.rng_master_seed if master_seed is None else int(master_seed)
    model = _read_model(config)

    bounds = [(c, min(c + CHUNK_SIZE, trials)) for c in range(0, trials, CHUNK_SIZE)]
    jobs = [(i, lo, hi - lo) for i, (lo, hi) in enumerate(bounds)]

    if threads and threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda j: _simulate_chunk(config, model, seed, j[0], j[2]), jobs))
    else:
        results = [_simulate_chunk(config, model, seed, i, n) for i, _, n in jobs]

    write_window, read_window = default_windows(config)
    meta = {
        "config_sha256": config.sha256(),
        "seed": seed,
        "cycles_per_sequence": config.cycles_per_sequence,
        "delay_s": config.write_read_delay,
        "write_duration_s": config.write_duration,
        "read_duration_s": config.read_duration,
        "default_write_window_s": list(write_window),
        "default_read_window_s": list(read_window),
    }
    return ClickBatch(
        delays=np.full(trials, config.write_read_delay),
        write_offsets=_concat_offsets([r[0] for r in results]),
        write_times=np.concatenate([r[1] for r in results]),
        read_offsets=_concat_offsets([r[2] for r in results]),
        read_times=np.concatenate([r[3] for r in results]),
        meta=meta,
    )


def simulate_delay_sweep(config: ExperimentConfig, delays, trials_per_point: int,
                         master_seed: int | None = None, threads: int = 1) -> ClickBatch:
    """Concatenate simulations at several write-read delays (independent seeds)."""
    delays = list(delays)
    seed = config.rng_master_seed if master_seed is None else int(master_seed)
    children = np.random.SeedSequence(seed).spawn(len(delays))
    batches = []
    for d, child in zip(delays, children):
        sub_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        sub = config.with_updates(write_read_delay=float(d))
        batches.append(simulate(sub, trials_per_point, master_seed=sub_seed, threads=threads))
    return ClickBatch.concat(batches)


# --- single-trial operations --------------------------------------------------


def sample_write(config: ExperimentConfig, rng: np.random.Generator):
    """One write pulse: returns (SpinWaveState, detected write click times)."""
    mu = config.mean_write_excitations
    n_tot = int(rng.geometric(1.0 / (1.0 + mu)) - 1) if mu > 0 else 0
    p_sym_det, p_asym_det = _write_detect_probs(config)
    is_sym = rng.random(n_tot) < config.write_efficiency
    t_emit = rng.random(n_tot) * config.write_duration
    delay = filters.sample_delay(config.filter_chain, rng, size=n_tot)
    kept = rng.random(n_tot) < np.where(is_sym, p_sym_det, p_asym_det)
    counts = np.array([[int(kept.sum())]], dtype=np.int64)
    offsets, clicks = assembly.assemble_trials(
        1, config.detector_dead_time, counts, (t_emit + delay)[kept])
    state = SpinWaveState(n_symmetric=int(is_sym.sum()),
                          n_asymmetric=int(n_tot - is_sym.sum()),
                          creation_time=0.0)
    return state, clicks


def evolve_spin_wave(state: SpinWaveState, delay: float, config: ExperimentConfig,
                     rng: np.random.Generator) -> SpinWaveState:
    """Independent exponential survival of each excitation over ``delay``."""
    if delay < 0:
        raise ValueError("delay must be >= 0")
    if delay == 0:
        return dataclasses.replace(state)
    p_sym = np.exp(-delay / config.spin_wave_lifetime)
    p_asym = np.exp(-delay / config.asymmetric_lifetime)
    return SpinWaveState(
        n_symmetric=int(rng.binomial(state.n_symmetric, p_sym)),
        n_asymmetric=int(rng.binomial(state.n_asymmetric, p_asym)),
        creation_time=state.creation_time,
    )


def sample_read(state: SpinWaveState, config: ExperimentConfig,
                rng: np.random.Generator) -> np.ndarray:
    """One read pulse acting on an evolved state: detected read click times."""
    model = _read_model(config)
    chain = config.filter_chain

    conv_mask, conv_t = model.convert(rng.random(state.n_symmetric))
    conv_delay = filters.sample_delay(chain, rng, size=conv_t.size)
    ret = (conv_t + conv_delay)[rng.random(conv_t.size) < model.p_detect]

    n_fwm = rng.poisson(model.total_fwm)
    fwm_t = model.fwm_times(rng.random(n_fwm))
    fwm_delay = filters.sample_delay(chain, rng, size=n_fwm)
    fwm = (fwm_t + fwm_delay)[rng.random(n_fwm) < model.p_detect]

    leak_cum = model.leak_cumulative(config.write_read_delay)
    n_leak = rng.poisson(float(leak_cum[-1]))
    leak = model.leak_times(rng.random(n_leak), config.write_read_delay) \
        + filters.sample_delay(chain, rng, size=n_leak)

    n_dark = rng.poisson(config.dark_rate * config.read_duration)
    dark = rng.random(n_dark) * config.read_duration

    counts = np.array([[ret.size], [fwm.size], [leak.size], [dark.size]], dtype=np.int64)
    flat = np.concatenate([ret, fwm, np.asarray(leak, dtype=float), dark])
    _, clicks = assembly.assemble_trials(1, config.detector_dead_time, counts, flat)
    return clicks


# --- analytic expectations (oracles for tests and fit inputs) ------------------


def expected_read_rate(config: ExperimentConfig, n_ce: float,
                       convolve: bool = True):
    """Exact expected detected rate curves of the simulator, per component.

    ``n_ce`` is the mean number of symmetric excitations alive at the start
    of the read window. Returns (t, components) where components maps
    'retrieval', 'fwm', 'leakage', 'dark' to detected counts/s per trial.
    Retrieval includes the at-most-one-photon saturation factor
    exp(-cumulative hazard); all filtered components are convolved with the
    filter delay response when ``convolve`` is set.
    """
    model = _read_model(config)
    t = model.t
    retrieval = n_ce * model.p_detect * model.hazard * np.exp(-model.cum_hazard)
    fwm = model.p_detect * model.fwm
    lc = config.leakage_coeffs
    leak = ((lc.l0 + lc.l1 * (config.write_read_delay + t))
            * config.drive_profile(t) * model.leak_factor)
    dark = np.full_like(t, config.dark_rate)

    if convolve and len(config.filter_chain):
        kernel = filters.response_kernel(config.filter_chain, model.dt)
        pad = kernel.size - 1
        t_ext = np.concatenate([t, t[-1] + model.dt * np.arange(1, pad + 1)])
        def smear(y):
            return np.convolve(y, kernel)[: t_ext.size]
        return t_ext, {
            "retrieval": smear(retrieval),
            "fwm": smear(fwm),
            "leakage": smear(leak),
            "dark": np.concatenate([dark, np.zeros(pad)]),
        }
    return t, {"retrieval": retrieval, "fwm": fwm, "leakage": leak, "dark": dark}


def expected_read_window_mean(config: ExperimentConfig, tau_r: float, n_ce: float,
                              convolve: bool = True) -> dict:
    """Expected detected counts per trial in [0, tau_r), per component."""
    t, comps = expected_read_rate(config, n_ce, convolve=convolve)
    mask = t <= tau_r
    out = {}
    for k, v in comps.items():
        out[k] = float(np.trapezoid(v[mask], t[mask]))
    out["total"] = sum(out.values())
    return out


def unconditional_n_ce(config: ExperimentConfig) -> float:
    """Mean symmetric excitations alive at read start (no heralding)."""
    return (config.mean_write_excitations * config.write_efficiency
            * np.exp(-config.write_read_delay / config.spin_wave_lifetime))


def heralded_n_ce(config: ExperimentConfig) -> float:
    """Mean symmetric excitations at read start given >= 1 write click.

    Exact for pedestal_pass_fraction = 1 (clicks are then a type-blind
    thinning of the total photon number); an approximation otherwise.
    """
    mu = config.mean_write_excitations
    mu_det = expected_write_click_mean(config)
    cond_total = heralded_mean_excitations(mu_det, mu)
    return (config.write_efficiency * cond_total
            * np.exp(-config.write_read_delay / config.spin_wave_lifetime))
