"""Command-line driver: ``polardoa <subcommand> [--config FILE] [overrides]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from . import __version__
from .detection import TECHNIQUES, ThresholdConfig, decide, threshold
from .errors import DoaError
from .estimators import ALGORITHMS, estimate
from .harness import (EVENT_HEADER, PROB_HEADER, RMSE_HEADER, ComplexityParams, ExperimentConfig,
                      complexity_counts, complexity_gain_db, load_config, run_event_sweep,
                      run_probability_curves, run_rmse_sweep)
from .model import SIGNAL_MODELS, noise_power_for_rsnr, steering_vector, synthesize
from .snapio import csv_text, read_snapshots, resolve_output, write_csv, write_metadata, write_snapshots

log = logging.getLogger("polardoa")


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {
        "trials": args.trials, "master_seed": args.seed, "m_samples": args.m,
        "alpha": args.alpha, "technique": args.technique, "signal_model": args.signal_model,
        "rsnr_grid_db": args.rsnr, "algorithms": args.algorithms, "output_path": args.output,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()


def _emit(cfg: ExperimentConfig, command: str, header, rows, extra=None) -> None:
    out = resolve_output(cfg.output_path)
    if out is None:
        sys.stdout.write(csv_text(header, rows))
        return
    write_csv(out, header, rows)
    meta = {"command": command, "version": __version__, "config": cfg.to_dict()}
    meta.update(extra or {})
    write_metadata(out, meta)
    log.info("wrote %s", out)


def cmd_synthesize(args) -> int:
    cfg = _resolve_config(args)
    a = steering_vector(cfg.array, cfg.scenario).compound
    s2 = args.sigma2 if args.sigma2 is not None else noise_power_for_rsnr(a, cfg.rsnr_grid_db[0])
    snap = synthesize(cfg.array, cfg.scenario, cfg.m_samples, s2, cfg.signal_model, cfg.master_seed)
    rows = [{"antenna": n + 1, "sample": m + 1, "real": v.real, "imag": v.imag}
            for n in range(snap.n_elements) for m, v in enumerate(snap.samples[n])]
    if args.raw:
        write_snapshots(resolve_output(args.raw), snap.samples)
    _emit(cfg, "synthesize", ["antenna", "sample", "real", "imag"], rows,
          {"noise_power": s2, "seed": cfg.master_seed})
    return 0


def cmd_estimate(args) -> int:
    cfg = _resolve_config(args)
    if args.input:
        if args.sigma2 is None:
            raise ValueError("--sigma2 is required with --input")
        snap = read_snapshots(args.input, args.sigma2)
    else:
        a = steering_vector(cfg.array, cfg.scenario).compound
        s2 = args.sigma2 if args.sigma2 is not None else noise_power_for_rsnr(a, cfg.rsnr_grid_db[0])
        snap = synthesize(cfg.array, cfg.scenario, cfg.m_samples, s2, cfg.signal_model,
                          cfg.master_seed)
    tcfg = ThresholdConfig(cfg.alpha, cfg.technique, snap.noise_power, snap.m_samples)
    event = decide(snap, tcfg)
    rows = []
    for alg in cfg.algorithms:
        row = {"algorithm": alg, "event": event.label, "threshold": event.report.threshold}
        try:
            est = estimate(snap, tcfg, alg, cfg.grid, cfg.array, event=event)
        except DoaError as exc:
            row["status"] = f"failed: {exc}"
        else:
            row.update(status="ok", theta_deg=est.theta_deg, phi_deg=est.phi_deg,
                       kappa1=est.phases.kappa1, kappa2=est.phases.kappa2)
        rows.append(row)
    _emit(cfg, "estimate", ["algorithm", "event", "threshold", "status", "theta_deg", "phi_deg",
                            "kappa1", "kappa2"], rows, {"noise_power": snap.noise_power})
    return 0


def cmd_threshold(args) -> int:
    cfg = _resolve_config(args)
    s2 = 1.0 if args.sigma2 is None else args.sigma2
    k = threshold(ThresholdConfig(cfg.alpha, cfg.technique, s2, cfg.m_samples))
    print(format(k, ".9g"))
    if cfg.output_path:
        _emit(cfg, "threshold", ["m_samples", "alpha", "technique", "noise_power", "threshold",
                                 "normalized_threshold"],
              [{"m_samples": cfg.m_samples, "alpha": cfg.alpha, "technique": cfg.technique,
                "noise_power": s2, "threshold": k, "normalized_threshold": k / s2}])
    return 0


def cmd_prob_curves(args) -> int:
    cfg = _resolve_config(args)
    _emit(cfg, "prob-curves", PROB_HEADER, run_probability_curves(cfg))
    return 0


def cmd_rmse_sweep(args) -> int:
    cfg = _resolve_config(args)
    _emit(cfg, "rmse-sweep", RMSE_HEADER, run_rmse_sweep(cfg))
    return 0


def cmd_event_sweep(args) -> int:
    cfg = _resolve_config(args)
    _emit(cfg, "event-sweep", EVENT_HEADER, run_event_sweep(cfg))
    return 0


def cmd_complexity(args) -> int:
    cfg = _resolve_config(args)
    p = ComplexityParams(args.n, args.m or cfg.m_samples, args.ntheta, args.nphi, args.p)
    count = complexity_counts(p, args.alg, args.event)
    print(format(count, ".9g"))
    if cfg.output_path:
        row = {"algorithm": args.alg, "event": args.event, "n_elements": p.n_elements,
               "m_samples": p.m_samples, "n_theta": p.n_theta, "n_phi": p.n_phi,
               "precision_p": p.precision_p, "count": count,
               "cf_count": complexity_counts(p, "cf", args.event),
               "gain_db": complexity_gain_db(p, args.alg, args.event)}
        _emit(cfg, "complexity", list(row), [row])
    return 0


COMMANDS = {
    "synthesize": cmd_synthesize,
    "estimate": cmd_estimate,
    "threshold": cmd_threshold,
    "prob-curves": cmd_prob_curves,
    "rmse-sweep": cmd_rmse_sweep,
    "event-sweep": cmd_event_sweep,
    "complexity": cmd_complexity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polardoa", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--output", help="CSV output path (sidecar .meta.json alongside)")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--m", type=int, help="samples per snapshot set")
        p.add_argument("--alpha", type=float)
        p.add_argument("--technique", choices=TECHNIQUES)
        p.add_argument("--signal-model", choices=SIGNAL_MODELS)
        p.add_argument("--rsnr", type=float, nargs="+", help="average RSNR grid in dB")
        p.add_argument("--algorithms", nargs="+", choices=ALGORITHMS)
        p.add_argument("--sigma2", type=float, help="noise power (overrides the RSNR mapping)")
        if name == "synthesize":
            p.add_argument("--raw", help="also write the raw binary snapshot file")
        if name == "estimate":
            p.add_argument("--input", help="raw binary snapshot file to estimate from")
        if name == "complexity":
            p.add_argument("--n", type=int, default=4)
            p.add_argument("--ntheta", type=int, default=91)
            p.add_argument("--nphi", type=int, default=360)
            p.add_argument("--p", type=int, default=1024)
            p.add_argument("--alg", choices=ALGORITHMS, default="cf")
            p.add_argument("--event", type=int, choices=(1, 2), default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, DoaError) as exc:
        print(f"polardoa {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
