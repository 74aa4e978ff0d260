"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .forecasting import EvaluationError, StrategyError, baseline_geth, baseline_gse, \
    format_lookahead
from .ingest import (DEFAULT_PERCENTILES, IngestError, aggregate_block_features, parse_blocks,
                     parse_ticks, parse_transactions, read_block_features, write_block_features)
from .matrix_profile import MatrixProfileError, mp_fast, mp_rolling, save_profile
from .neural import ShapeError, TrainingDiverged
from .pipeline import ConfigError, evaluate_run, load_config, run
from .series import FrameError, frame_from_block_features, load_frame, save_frame
from .wavelets import (CoherenceError, DwtError, band_summary, denoise_report, export_coherence,
                       hard_threshold_denoise, wavelet_coherence)

logger = logging.getLogger("gasforecast")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

DATA_ERRORS = (IngestError, FrameError, MatrixProfileError, CoherenceError, DwtError,
               StrategyError, EvaluationError, ShapeError, FileNotFoundError, KeyError)
NUMERIC_ERRORS = (TrainingDiverged, ArithmeticError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _column(frame, name):
    if name not in frame.variables:
        raise UsageError(f"unknown variable {name!r}; frame has {', '.join(frame.variables)}")
    col = frame.column(name)
    if not np.all(np.isfinite(col)):
        raise FrameError(f"variable {name!r} has gaps")
    return col


def cmd_ingest(args):
    txs = parse_transactions(args.transactions)
    for rej in txs.rejects:
        logger.warning("%s line %d rejected: %s", args.transactions, rej.line, rej.reason)
    blocks = parse_blocks(args.blocks)
    rows = aggregate_block_features(txs.records, blocks, tuple(args.percentiles))
    write_block_features(rows, args.output, tuple(args.percentiles))
    print(f"blocks={len(rows)} transactions={len(txs.records)} rejected={len(txs.rejects)}")
    return EXIT_OK


def cmd_frame(args):
    rows = read_block_features(args.features)
    ticks = parse_ticks(args.ticks) if args.ticks else None
    frame = frame_from_block_features(rows, args.resolution, ticks)
    save_frame(frame, args.output)
    gaps = int(frame.gap_mask.any(axis=1).sum())
    print(f"rows={len(frame)} variables={','.join(frame.variables)} gap_rows={gaps}")
    return EXIT_OK


def cmd_coherence(args):
    frame = load_frame(args.frame)
    x, y = _column(frame, args.x), _column(frame, args.y)
    cmap = wavelet_coherence(x, y)
    export_coherence(cmap, args.output)
    print("scale_lo\tscale_hi\tmean_r2\tcells")
    for lo, hi, mean, count in band_summary(cmap):
        print(f"{lo:g}\t{hi:g}\t{mean:.6f}\t{count}")
    if args.plot:
        plotting.coherence_map(cmap, args.plot, (args.x, args.y))
    return EXIT_OK


def cmd_denoise(args):
    frame = load_frame(args.frame)
    raw = _column(frame, args.variable)
    level = args.level if args.level else max(args.levels)
    print("lambda\trmse\tsnr_db")
    for lam in args.lam:
        den, _ = hard_threshold_denoise(raw, args.wavelet, level, args.levels, lam)
        rep = denoise_report(raw, den)
        print(f"{lam:g}\t{rep['rmse']!r}\t{rep['snr_db']!r}")
    if args.output:
        save_frame(frame.replace_column(args.variable, den), args.output)
    if args.plot:
        plotting.denoise_comparison(raw, den, args.plot, f"{args.wavelet} lambda={args.lam[-1]:g}")
    return EXIT_OK


def cmd_mp(args):
    frame = load_frame(args.frame)
    series = _column(frame, args.variable)
    if args.rolling:
        snaps = mp_rolling(series, args.window, args.step)
        if not snaps:
            raise MatrixProfileError("no prefix is long enough for a snapshot")
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for snap in snaps:
            save_profile(snap.profile, out / f"profile_{snap.end:08d}.csv")
        profile = snaps[-1].profile
        print(f"snapshots={len(snaps)}")
    else:
        profile = mp_fast(series, args.window)
        save_profile(profile, args.output)
    print(f"length={len(profile)} motif={profile.motif()} discord={profile.discord()} "
          f"flagged={len(profile.flagged)}")
    if args.plot:
        plotting.matrix_profile(series, profile, args.plot)
    return EXIT_OK


def cmd_run(args):
    config = load_config(args.config)
    result = run(config)
    sys.stdout.write(format_lookahead(result.report))
    print(f"run directory: {result.directory}")
    return EXIT_OK


def cmd_evaluate(args):
    if not (Path(args.run_dir) / "config.json").is_file():
        raise UsageError(f"{args.run_dir} is not a run directory (no config.json)")
    frame = load_frame(args.frame) if args.frame else None
    sys.stdout.write(format_lookahead(evaluate_run(args.run_dir, frame)))
    return EXIT_OK


def cmd_baseline(args):
    rows = read_block_features(args.features)
    minima = np.array([r.min_gas_price for r in rows if r.min_gas_price is not None])
    if args.method == "geth":
        print(repr(baseline_geth(minima)))
    else:
        if args.candidate is None:
            raise UsageError("gse needs --candidate")
        print(repr(baseline_gse(minima, args.candidate)))
    return EXIT_OK


def build_parser():
    p = Parser(prog="gasforecast", description="Gas-price feature building, analysis and forecasting.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", parser_class=Parser)
    sub.required = True

    s = sub.add_parser("ingest", help="aggregate transactions and blocks into block features")
    s.add_argument("--transactions", required=True)
    s.add_argument("--blocks", required=True)
    s.add_argument("--percentiles", type=float, nargs="+", default=list(DEFAULT_PERCENTILES))
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("frame", help="downsample block features to a uniform frame")
    s.add_argument("--features", required=True)
    s.add_argument("--ticks")
    s.add_argument("--resolution", type=int, default=300)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_frame)

    s = sub.add_parser("coherence", help="wavelet coherence grid of two variables")
    s.add_argument("--frame", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--plot")
    s.set_defaults(func=cmd_coherence)

    s = sub.add_parser("denoise", help="hard-threshold wavelet denoising")
    s.add_argument("--frame", required=True)
    s.add_argument("--variable", default="min_gas_price")
    s.add_argument("--wavelet", default="db4", choices=("db4", "bior3.3"))
    s.add_argument("--lam", type=float, nargs="+", default=[3.0])
    s.add_argument("--levels", type=int, nargs="+", default=[1, 2])
    s.add_argument("--level", type=int)
    s.add_argument("-o", "--output")
    s.add_argument("--plot")
    s.set_defaults(func=cmd_denoise)

    s = sub.add_parser("mp", help="matrix profile of one variable")
    s.add_argument("--frame", required=True)
    s.add_argument("--variable", default="min_gas_price")
    s.add_argument("--window", type=int, default=288)
    s.add_argument("--rolling", action="store_true")
    s.add_argument("--step", type=int, default=288)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--plot")
    s.set_defaults(func=cmd_mp)

    s = sub.add_parser("run", help="train and evaluate from a JSON experiment config")
    s.add_argument("config")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("evaluate", help="re-score a run directory from its checkpoints")
    s.add_argument("run_dir")
    s.add_argument("--frame")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("baseline", help="heuristic oracle on block minima")
    s.add_argument("--features", required=True)
    s.add_argument("--method", choices=("geth", "gse"), default="geth")
    s.add_argument("--candidate", type=float)
    s.set_defaults(func=cmd_baseline)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (*DATA_ERRORS, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
