"""Command-line pipeline: simulate -> analyze -> fit.

Durations on the command line are in microseconds (the natural unit of the
experiment); everything internal is seconds. Every command writes a run
manifest next to its output so results are reproducible from the manifest
alone. Exit codes: 0 ok, 2 usage, 3 data, 4 convergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__, fits, stats
from .config import ConfigError, ExperimentConfig, load_config
from .source import ClickBatch, heralded_n_ce, simulate, unconditional_n_ce

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 2, 3, 4


@dataclasses.dataclass
class RunManifest:
    config_sha256: str | None
    seed: int | None
    command: list[str]
    inputs: list[str]
    outputs: list[str]
    tool_version: str
    wall_clock_s: float
    created_utc: str

    def write(self, path) -> str:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return str(path)


def _manifest(args, config_hash, seed, inputs, outputs, t0) -> RunManifest:
    return RunManifest(
        config_sha256=config_hash,
        seed=seed,
        command=list(args),
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        tool_version=__version__,
        wall_clock_s=time.monotonic() - t0,
        created_utc=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    )


def _us(value: str) -> float:
    return float(value) * 1e-6


def _window(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("window must be 'start,end' in microseconds")
    return _us(parts[0]), _us(parts[1])


def _load_config_arg(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    with open(path, "rb") as fh:
        return load_config(fh)


def cmd_simulate(ns, argv) -> int:
    t0 = time.monotonic()
    try:
        config = _load_config_arg(ns.config)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if ns.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    seed = ns.seed if ns.seed is not None else config.rng_master_seed
    batch = simulate(config, ns.trials, master_seed=seed, threads=ns.threads)
    manifest_path = str(ns.out) + ".manifest.json"
    # header references the manifest by name so record content is
    # reproducible independent of the directory the run lands in
    batch.to_jsonl(ns.out, manifest_path=os.path.basename(manifest_path))
    _manifest(argv, config.sha256(), seed, [ns.config] if ns.config else [],
              [ns.out], t0).write(manifest_path)
    n_clicks = batch.write_times.size + batch.read_times.size
    print(f"simulate: {ns.trials} trials, {n_clicks} clicks -> {ns.out}")
    return EXIT_OK


def cmd_analyze(ns, argv) -> int:
    t0 = time.monotonic()
    try:
        batch = ClickBatch.from_jsonl(ns.records)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read records: {exc}", file=sys.stderr)
        return EXIT_DATA
    write_window = ns.write_window or tuple(
        batch.meta.get("default_write_window_s", (0.0, np.inf)))
    if ns.read_window:
        # an explicit read window defines a single analysis cell
        read_windows = [tuple(ns.read_window)]
    else:
        taus = [_us(v) for v in ns.tau_r.split(",")] if ns.tau_r else [40e-6]
        read_windows = [(0.0, t) for t in taus]
    rows = []
    flagged = 0
    for delay, sub in stats.group_by_delay(batch):
        for read_window in read_windows:
            res = stats.analyze_correlations(
                sub, write_window=write_window, read_window=read_window,
                detection_efficiency=ns.detection_efficiency,
                n_resamples=ns.bootstrap, seed=ns.seed or 0)
            flagged += bool(res.flags)
            rows.append((delay, read_window[1] - read_window[0], res))
    stats.write_correlation_csv(ns.out, rows)
    _manifest(argv, batch.meta.get("config_sha256"), batch.meta.get("seed"),
              [ns.records], [ns.out], t0).write(str(ns.out) + ".manifest.json")
    print(f"analyze: {len(rows)} cells ({flagged} with undefined statistics) -> {ns.out}")
    return EXIT_OK


def _fit_decay(ns) -> fits.FitReport:
    with open(ns.data, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        pts = [(_us(r["delay_us"]), float(r["value"]), float(r["stderr"]))
               for r in reader]
    result = fits.fit_exp_decay(np.array(pts), model=ns.decay_model)
    return result.report


def _fit_scan(ns, config) -> fits.FitReport:
    with open(ns.data, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = [(float(r["detuning_hz"]), float(r["counts_per_pulse"]),
                 float(r["stderr"])) for r in reader]
    arr = np.array(rows)
    scan = fits.SpectralScan(arr[:, 0], arr[:, 1], arr[:, 2])
    result = fits.fit_scan(scan, ns.scan_kind, config.filter_chain,
                           zeeman_splitting=config.zeeman_splitting)
    report = result.report
    report.params["write_efficiency"] = result.write_efficiency
    report.stderr["write_efficiency"] = result.write_efficiency_err
    return report


def _fit_shape(ns, config) -> fits.FitReport:
    batch = ClickBatch.from_jsonl(ns.data)
    batch_nw = ClickBatch.from_jsonl(ns.records_no_write)
    read_dur = batch.meta.get("read_duration_s", config.read_duration)
    edges = np.arange(0.0, read_dur + ns.bin_width / 2, ns.bin_width)
    uncond = stats.binned_read_rates(batch, edges)
    herald = stats.binned_read_rates(batch, edges, heralded=True)
    no_write = stats.binned_read_rates(batch_nw, edges)
    eta_chain = config.detection_chain_efficiency
    fixed = fits.ShapeModelParams(
        chi_r=0.0, alpha_of_t=config.fwm_couplings.alpha_table,
        omega_sq_of_t=config.drive_profile, T1=config.population_decay,
        n_ce=unconditional_n_ce(config) * eta_chain,
        L0=config.leakage_coeffs.l0, L1=config.leakage_coeffs.l1,
        BG=config.dark_rate)
    result = fits.fit_chi_r((uncond, herald), no_write, fixed,
                            n_ce_heralded=heralded_n_ce(config) * eta_chain)
    if ns.decomposition_out:
        params = dataclasses.replace(fixed, chi_r=result.chi_r)
        dec = fits.decompose_shape(params, edges, chain=config.filter_chain,
                                   data=uncond.y)
        with open(ns.decomposition_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_center_s", "data_rate", "retrieval", "fwm",
                             "noise", "model_total", "residual"])
            for i in range(dec.bin_centers.size):
                writer.writerow([dec.bin_centers[i], uncond.y[i], dec.retrieval[i],
                                 dec.fwm[i], dec.noise[i], dec.total[i],
                                 dec.residual[i]])
    return result.report


def cmd_fit(ns, argv) -> int:
    t0 = time.monotonic()
    try:
        config = _load_config_arg(ns.config)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        if ns.model == "decay":
            report = _fit_decay(ns)
        elif ns.model == "scan":
            report = _fit_scan(ns, config)
        else:
            report = _fit_shape(ns, config)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: bad fit input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except fits.ConvergenceError as exc:
        report = fits.FitReport(model=ns.model, params={}, stderr={}, covariance=[],
                                objective=float("nan"), n_iterations=0, success=False,
                                message=str(exc))
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        print(f"error: fit did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    manifest_path = str(ns.out) + ".manifest.json"
    with open(ns.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json(manifest=manifest_path))
    inputs = [p for p in (ns.data, getattr(ns, "records_no_write", None), ns.config) if p]
    _manifest(argv, config.sha256(), None, inputs, [ns.out], t0).write(manifest_path)
    summary = ", ".join(f"{k}={v:.6g}" for k, v in report.params.items())
    print(f"fit[{ns.model}]: {summary} -> {ns.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heraldsim",
        description="Simulate and analyze a motionally-averaged heralded photon source")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate click records (JSONL)")
    p_sim.add_argument("--config", help="JSON config path (defaults: nominal run)")
    p_sim.add_argument("--trials", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p_ana = sub.add_parser("analyze", help="correlation summary CSV from records")
    p_ana.add_argument("--records", required=True, help="JSONL click records")
    p_ana.add_argument("--out", required=True)
    p_ana.add_argument("--write-window", type=_window, default=None,
                       metavar="A,B", help="write window in us (default: header)")
    p_ana.add_argument("--read-window", type=_window, default=None, metavar="A,B",
                       help="read window in us (default: 0,tau_r)")
    p_ana.add_argument("--tau-r", default=None,
                       help="comma list of read integration times in us (default 40)")
    p_ana.add_argument("--bootstrap", type=int, default=500)
    p_ana.add_argument("--detection-efficiency", type=float, default=0.096)
    p_ana.add_argument("--seed", type=int, default=0)

    p_fit = sub.add_parser("fit", help="nonlinear model fits")
    p_fit.add_argument("--model", choices=("shape", "decay", "scan"), required=True)
    p_fit.add_argument("--data", required=True,
                       help="decay/scan: CSV; shape: with-write JSONL records")
    p_fit.add_argument("--records-no-write", default=None,
                       help="shape model: JSONL records simulated without write")
    p_fit.add_argument("--config", default=None)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--decay-model", choices=("pure", "offset"), default="pure")
    p_fit.add_argument("--scan-kind", choices=("write", "read", "read-no-write"),
                       default="write")
    p_fit.add_argument("--bin-width", type=_us, default=5e-6, metavar="US",
                       help="shape-model bin width in us (default 5)")
    p_fit.add_argument("--decomposition-out", default=None)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if ns.command == "simulate":
        return cmd_simulate(ns, argv)
    if ns.command == "analyze":
        return cmd_analyze(ns, argv)
    if ns.command == "fit":
        if ns.model == "shape" and not ns.records_no_write:
            print("error: --model shape requires --records-no-write", file=sys.stderr)
            return EXIT_USAGE
        return cmd_fit(ns, argv)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
