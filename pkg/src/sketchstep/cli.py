"""Command-line entry point ``sketchstep``.

    sketchstep <experiment> --config FILE [--seed N] [--out DIR]
    sketchstep init-config <experiment>

Each experiment writes ``<out>/<experiment>_<timestamp>.csv`` (plus extra
tables for some experiments) and prints the written paths.  Failures print
one JSON line ``{"status": "error", ...}`` to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys

import numpy as np

from . import experiments as ex
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, config_hash, default_config, load_config, serialize_config
from .nnfield import AdamSchedule, NetworkSpec
from .spectral import AdaptiveRkConfig


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, columns, rows, comment: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row[c]) for c in columns])


def _stamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")


def _output_path(out_dir, experiment, stamp, suffix=""):
    return os.path.join(out_dir, f"{experiment}_{stamp}{suffix}.csv")


def _pde_setup(p: dict) -> ex.PdeSetup:
    if p["pde"] == "schrodinger":
        pde = ex.make_pde("schrodinger", alpha2=p["alpha2"], alpha4=p["alpha4"],
                          quadratic=p["potential"] == "quadratic")
    else:
        pde = ex.make_pde("allen-cahn", epsilon=p["epsilon"])
    spec = NetworkSpec(pde.length, p["embedding_frequencies"], p["hidden_layers"], p["hidden_width"], pde.outputs)
    fit = AdamSchedule(p["fit_iters"], p["fit_lr_max"], p["fit_lr_min"])
    return ex.PdeSetup(pde, spec, p["collocation"], p["dt"], p["num_steps"], fit, p["fit_points"])


def run_experiment(cfg: ExperimentConfig, stamp: str | None = None) -> list[str]:
    """Run ``cfg`` and write its tables; returns the written paths."""
    stamp = stamp or _stamp()
    os.makedirs(cfg.output_dir, exist_ok=True)
    p, seed = cfg.params, cfg.seed
    comment = f"experiment={cfg.experiment} config_hash={config_hash(cfg)} seed={seed}"
    written = []

    def emit(columns, rows, suffix=""):
        path = _output_path(cfg.output_dir, cfg.experiment, stamp, suffix)
        write_csv(path, columns, rows, comment)
        written.append(path)

    if cfg.experiment == "conditioning":
        rows = ex.conditioning(p["p"], p["omega"], p["m_grid"], p["trials"], p["laws"], p["n"], seed)
        emit(ex.CONDITIONING_COLUMNS, rows)
    elif cfg.experiment == "rho":
        emit(ex.RHO_COLUMNS, ex.rho_statistics(p["p"], p["ratio"], p["m_grid"], p["trials"], seed))
    elif cfg.experiment == "biasvar":
        rows = ex.biasvar(p["n"], p["p"], p["omega_grid"], p["m_grid"], p["gamma_draws"], p["rhs_draws"], p["law"], seed)
        emit(ex.BIASVAR_COLUMNS, rows)
    elif cfg.experiment == "mse-scaling":
        rows = ex.mse_scaling(p["p"], p["m"], p["q_grid"], p["dt_grid"], p["horizon"], p["replicates"],
                              p["dt_for_q"], p["q_for_dt"], p["law"], p["include_full"], seed)
        emit(ex.MSE_COLUMNS, rows)
    elif cfg.experiment == "pde":
        setup = _pde_setup(p)
        methods = ex.build_methods(p["methods"], p["alphas"], p["ranks"], p["sketch_m"], p["sketch_q"], p["law"])
        ckpt = os.path.join(cfg.output_dir, "checkpoints") if p["checkpoints"] else None
        if ckpt:
            os.makedirs(ckpt, exist_ok=True)
        rows, summary, timing = ex.pde_sweep(
            setup, methods, p["replicates"], seed, p["reference_size"],
            AdaptiveRkConfig(rel_tol=p["rel_tol"], abs_tol=p["abs_tol"]),
            p["test_points"], p["test_times"], ckpt, p["workers"],
        )
        emit(ex.PDE_COLUMNS, rows)
        emit(ex.PDE_SUMMARY_COLUMNS, summary, "_summary")
        # wall-clock numbers are not reproducible, so they live in their own table
        emit(ex.PDE_TIMING_COLUMNS, timing, "_timing")
    else:  # pragma: no cover - guarded by the config schema
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    return written


def _error(kind: str, message: str, code: int) -> int:
    print(json.dumps({"status": "error", "type": kind, "message": message}), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchstep", description="Randomized sketched time-stepping experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="INI config file")
        sp.add_argument("--seed", type=int, help="override [experiment] seed")
        sp.add_argument("--out", help="override [experiment] output_dir")
    ic = sub.add_parser("init-config", help="print a default config for an experiment")
    ic.add_argument("experiment", choices=EXPERIMENTS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            return _error("UsageError", "invalid command line (see usage above)", 2)
        return 0
    if args.command == "init-config":
        sys.stdout.write(serialize_config(default_config(args.experiment)))
        return 0
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output_dir = args.out
        paths = run_experiment(cfg)
    except ConfigError as exc:
        return _error("ConfigError", str(exc), 2)
    except Exception as exc:  # noqa: BLE001 - the CLI contract is one error line
        return _error(type(exc).__name__, str(exc), 1)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
