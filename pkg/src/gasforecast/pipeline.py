"""Experiment configuration and the end-to-end run behind ``gasforecast run``.

A config is a JSON object::

    {
      "seed": 7,                       # mandatory
      "output_dir": "runs/hybrid",
      "data": {"frame": "frame.csv"}   # or {"transactions", "blocks", "ticks"}
      "resolution": 300,
      "truncate_k": 2.0,               # null disables outlier capping
      "walk_forward": {"train_span": 8640, "stride": 288},   # optional
      "figures": true,
      "strategy": {"strategy": "hybrid", "horizon": 10, "n": 288, ...}
    }

Relative paths are resolved against the config file's directory. The run
directory is rewritten from scratch; everything except ``manifest.json`` is a
pure function of the config.
"""

import hashlib
import json
import logging
import shutil
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import plotting
from .forecasting import (StrategySpec, TrainedStrategy, average_reports, evaluate, fit,
                          format_lookahead, format_table, leakage_audit, predict_dataset, prepare)
from .ingest import aggregate_block_features, parse_blocks, parse_ticks, parse_transactions
from .neural import load_checkpoint, save_checkpoint
from .series import DEFAULT_STEP, ZScoreParams, frame_from_block_features, load_frame, \
    resample_frame, walk_forward

logger = logging.getLogger(__name__)

CONFIG_KEYS = ("seed", "output_dir", "data", "resolution", "truncate_k", "walk_forward",
               "figures", "strategy")
DATA_KEYS = ("frame", "transactions", "blocks", "ticks")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    output_dir: str
    data: dict
    strategy: StrategySpec
    resolution: int = DEFAULT_STEP
    truncate_k: Optional[float] = 2.0
    walk_forward: Optional[dict] = None
    figures: bool = True

    @property
    def step_minutes(self):
        return self.resolution / 60.0

    def to_dict(self):
        return {"seed": self.seed, "output_dir": self.output_dir, "data": dict(self.data),
                "resolution": self.resolution, "truncate_k": self.truncate_k,
                "walk_forward": self.walk_forward, "figures": self.figures,
                "strategy": self.strategy.to_dict()}

    @classmethod
    def from_dict(cls, d, base_dir="."):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if "seed" not in d or not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
            raise ConfigError("config needs an integer 'seed'")
        for key in ("output_dir", "data", "strategy"):
            if key not in d:
                raise ConfigError(f"config is missing {key!r}")
        data = dict(d["data"])
        bad = set(data) - set(DATA_KEYS)
        if bad:
            raise ConfigError(f"unknown data key(s): {', '.join(sorted(bad))}")
        raw_inputs = "blocks" in data or "transactions" in data
        if "frame" in data and raw_inputs:
            raise ConfigError("data takes either 'frame' or 'transactions' and 'blocks', not both")
        if "frame" not in data and not ("blocks" in data and "transactions" in data):
            raise ConfigError("data needs 'frame' or both 'transactions' and 'blocks'")
        base = Path(base_dir)
        for k, v in data.items():
            p = (base / v).resolve()
            if not p.is_file():
                raise ConfigError(f"data file {k}={v} does not exist")
            data[k] = str(p)
        out = str((base / d["output_dir"]).resolve())
        try:
            strategy = StrategySpec.from_dict(d["strategy"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"strategy: {exc}") from exc
        wf = d.get("walk_forward")
        if wf is not None:
            if set(wf) != {"train_span", "stride"}:
                raise ConfigError("walk_forward needs exactly 'train_span' and 'stride'")
            wf = {"train_span": int(wf["train_span"]), "stride": int(wf["stride"])}
        res = int(d.get("resolution", DEFAULT_STEP))
        if res <= 0:
            raise ConfigError("resolution must be positive")
        return cls(d["seed"], out, data, strategy, res, d.get("truncate_k", 2.0), wf,
                   bool(d.get("figures", True)))


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(raw, path.parent)


def build_frame(config):
    """Load or assemble the feature frame at the configured resolution."""
    data = config.data
    if "frame" in data:
        frame = load_frame(data["frame"])
        if frame.step != config.resolution:
            frame = resample_frame(frame, config.resolution)
        return frame
    txs = parse_transactions(data["transactions"])
    if txs.rejects:
        logger.warning("%d transaction row(s) rejected", len(txs.rejects))
    rows = aggregate_block_features(txs.records, parse_blocks(data["blocks"]))
    ticks = parse_ticks(data["ticks"]) if "ticks" in data else None
    return frame_from_block_features(rows, config.resolution, ticks)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_forecasts(path, times, actual, pred, step_minutes):
    lines = ["example\tlookahead\tminutes\ttarget_time\tactual\tforecast"]
    for i in range(actual.shape[0]):
        for h in range(actual.shape[1]):
            lines.append(f"{i}\t{h + 1}\t{(h + 1) * step_minutes:g}\t{int(times[i, h])}\t"
                         f"{float(actual[i, h])!r}\t{float(pred[i, h])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_trained(trained, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, (net, rep) in enumerate(zip(trained.members, trained.reports)):
        save_checkpoint(net, directory / f"member_{k:02d}.ckpt")
        (directory / f"train_report_{k:02d}.txt").write_text(rep.to_text())
    _write_json(directory / "normalization.json",
                {"target_index": trained.target_index, **trained.norm.to_dict()})


def load_trained(spec, directory, seed=0):
    directory = Path(directory)
    norm = json.loads((directory / "normalization.json").read_text())
    members = [load_checkpoint(directory / f"member_{k:02d}.ckpt") for k in range(spec.n_models)]
    return TrainedStrategy(spec, members, [], ZScoreParams.from_dict(norm), norm["target_index"],
                           seed)


def _span_frames(frame, config):
    if config.walk_forward is None:
        return [("all", frame)]
    plan = walk_forward(frame, config.walk_forward["train_span"], config.walk_forward["stride"])
    return [(f"w{k:03d}", frame.slice(w.start, w.stop)) for k, w in enumerate(plan.windows)]


@dataclass
class RunResult:
    directory: Path
    report: object = None
    reports: list = field(default_factory=list)
    status: str = "ok"
    failed_stage: Optional[str] = None
    error: Optional[str] = None


def run(config):
    """Execute ``config``; the run directory keeps partial output on failure.

    Exceptions propagate after ``manifest.json`` records the failing stage.
    """
    out = Path(config.output_dir)
    if out.exists():
        shutil.rmtree(out)
    out.mkdir(parents=True)
    _write_json(out / "config.json", config.to_dict())
    result = RunResult(out)
    stage = "frame"
    try:
        frame = build_frame(config)
        spec = config.strategy
        if not spec.label:
            spec = replace(spec, label=spec.kind)
        span_reports = []
        for name, sub in _span_frames(frame, config):
            span_dir = out / "models" / name
            stage = f"prepare:{name}"
            prep = prepare(sub, spec, config.truncate_k)
            if not (leakage_audit(prep.train, spec.horizon) and leakage_audit(prep.val, spec.horizon)):
                raise RuntimeError("leakage audit failed")
            stage = f"train:{name}"
            trained = fit(spec, prep.train, prep.val, prep.norm, config.seed)
            trained.provenance = {"span": name, "start_time": sub.start_time, "rows": len(sub),
                                  "seed": config.seed}
            save_trained(trained, span_dir)
            stage = f"evaluate:{name}"
            rep = evaluate(trained, prep.val, config.step_minutes, spec.label)
            span_reports.append(rep)
            (span_dir / "lookahead_report.tsv").write_text(format_lookahead(rep))
            actual, pred, _ = predict_dataset(trained, prep.val)
            times = prep.val.target_times()[:, :spec.horizon]
            _write_forecasts(span_dir / "forecasts.tsv", times, actual, pred, config.step_minutes)
            if config.figures:
                stage = f"figures:{name}"
                fig_dir = out / "figures"
                fig_dir.mkdir(exist_ok=True)
                picks = sorted({1, spec.horizon})
                plotting.forecast_vs_actual(times, actual, pred, picks,
                                            fig_dir / f"forecast_{name}.png",
                                            config.step_minutes, spec.label)
                plotting.loss_curves(trained.reports, fig_dir / f"loss_{name}.png")
        stage = "report"
        report = span_reports[0] if len(span_reports) == 1 else average_reports(span_reports)
        result.report, result.reports = report, span_reports
        (out / "lookahead_report.tsv").write_text(format_lookahead(report))
        target = spec.target
        (out / "table.tsv").write_text(format_table(
            [(f"{target} {spec.label} avg5", report.avg5),
             (f"{target} {spec.label} avg10", report.avg10)]))
        if config.figures:
            plotting.metrics_by_lookahead(report, out / "figures" / "metrics_by_lookahead.png")
    except Exception as exc:
        result.status, result.failed_stage, result.error = "failed", stage, str(exc)
        write_manifest(config, result)
        raise
    write_manifest(config, result)
    return result


def write_manifest(config, result):
    out = result.directory
    files = {str(p.relative_to(out)): _sha256(p) for p in sorted(out.rglob("*"))
             if p.is_file() and p.name != "manifest.json"}
    _write_json(out / "manifest.json", {
        "seed": config.seed,
        "status": result.status,
        "failed_stage": result.failed_stage,
        "error": result.error,
        "files": files,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    })


def evaluate_run(directory, frame=None):
    """Re-score the last trained span of a run directory from its checkpoints."""
    directory = Path(directory)
    config = ExperimentConfig.from_dict(json.loads((directory / "config.json").read_text()),
                                        directory)
    frame = build_frame(config) if frame is None else frame
    spec = config.strategy
    if not spec.label:
        spec = replace(spec, label=spec.kind)
    name, sub = _span_frames(frame, config)[-1]
    prep = prepare(sub, spec, config.truncate_k)
    trained = load_trained(spec, directory / "models" / name, config.seed)
    return evaluate(trained, prep.val, config.step_minutes, spec.label)


def synthetic_frame(days=60, steps_per_day=288, phi=0.9, sigma=0.15, level=50.0, amplitude=10.0,
                    scale=10.0, seed=0, step=DEFAULT_STEP):
    """Daily sinusoid plus AR(1) noise as a one-column ``min_gas_price`` frame."""
    from .series import FeatureFrame
    rng = np.random.default_rng(seed)
    T = days * steps_per_day
    eps = rng.normal(0.0, sigma, T)
    noise = np.empty(T)
    noise[0] = eps[0]
    for i in range(1, T):
        noise[i] = phi * noise[i - 1] + eps[i]
    t = np.arange(T)
    y = level + amplitude * np.sin(2 * np.pi * t / steps_per_day) + scale * noise
    return FeatureFrame.from_columns(0, step, {"min_gas_price": y})
