"""Uniform multivariate frames, normalization, windowing and error metrics."""

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_STEP = 300
MAPE_EPS = 1e-8

# variables emitted by frame_from_block_features, in column order
BLOCK_VARIABLES = ("min_gas_price", "max_gas_price", "avg_gas_price", "tx_count",
                   "contract_count", "base_fee", "gas_used", "size_gas", "size_bytes")


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureFrame:
    """``T x V`` values on a regular grid ``start_time + k * step``.

    Masked cells hold NaN; unmasked cells are finite.
    """

    start_time: int
    step: int
    variables: tuple
    values: np.ndarray
    gap_mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.variables):
            raise FrameError(f"values shape {values.shape} does not match {len(self.variables)} variables")
        mask = np.asarray(self.gap_mask, dtype=bool)
        if mask.shape != values.shape:
            raise FrameError("gap_mask shape differs from values shape")
        if self.step <= 0:
            raise FrameError("step must be positive")
        if len(set(self.variables)) != len(self.variables):
            raise FrameError("variable names must be unique")
        if not np.all(np.isfinite(values[~mask])):
            raise FrameError("non-finite value in an unmasked cell")
        values = np.where(mask, np.nan, values)
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gap_mask", mask)

    @classmethod
    def from_columns(cls, start_time, step, columns):
        """Build from a ``{name: 1-D array}`` mapping; NaN marks gaps."""
        names = tuple(columns)
        values = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
        return cls(start_time, step, names, values, ~np.isfinite(values))

    def __len__(self):
        return self.values.shape[0]

    @property
    def times(self):
        return self.start_time + self.step * np.arange(len(self), dtype=np.int64)

    def index(self, name):
        try:
            return self.variables.index(name)
        except ValueError:
            raise FrameError(f"unknown variable {name!r}; have {', '.join(self.variables)}") from None

    def column(self, name):
        return self.values[:, self.index(name)]

    def select(self, names):
        idx = [self.index(n) for n in names]
        return FeatureFrame(self.start_time, self.step, tuple(names),
                            self.values[:, idx], self.gap_mask[:, idx])

    def slice(self, start, stop):
        return FeatureFrame(self.start_time + start * self.step, self.step, self.variables,
                            self.values[start:stop], self.gap_mask[start:stop])

    def with_column(self, name, values):
        values = np.asarray(values, dtype=float).reshape(-1, 1)
        if values.shape[0] != len(self):
            raise FrameError(f"column {name!r} has {values.shape[0]} rows, frame has {len(self)}")
        mask = ~np.isfinite(values)
        return FeatureFrame(self.start_time, self.step, self.variables + (name,),
                            np.hstack([self.values, values]), np.hstack([self.gap_mask, mask]))

    def replace_column(self, name, values):
        j = self.index(name)
        new = np.array(self.values)
        new[:, j] = values
        return FeatureFrame(self.start_time, self.step, self.variables, new, ~np.isfinite(new))


def downsample_mean(timestamps, values, window, start=None, stop=None):
    """Average irregular samples into ``[t, t + window)`` buckets.

    Parameters
    ----------
    timestamps : array of seconds, shape (N,)
    values : array, shape (N,) or (N, V); NaN entries are ignored
    window : bucket width in seconds
    start : first bucket edge; defaults to the first timestamp floored to
        a multiple of ``window``
    stop : exclusive end of the grid; defaults to just past the last sample

    Returns
    -------
    (start, means, mask) where ``means`` has shape (K, V) and ``mask`` flags
    buckets with no finite member.
    """
    ts = np.asarray(timestamps, dtype=np.int64)
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if ts.size == 0:
        raise FrameError("cannot downsample empty input")
    if window <= 0:
        raise FrameError("window must be positive")
    if start is None:
        start = int(ts.min() // window * window)
    if stop is None:
        stop = int(ts.max()) + 1
    n_buckets = max(1, -(-(stop - start) // window))
    keep = (ts >= start) & (ts < start + n_buckets * window)
    bucket = (ts[keep] - start) // window
    vals = vals[keep]
    finite = np.isfinite(vals)
    sums = np.zeros((n_buckets, vals.shape[1]))
    counts = np.zeros((n_buckets, vals.shape[1]))
    for j in range(vals.shape[1]):
        np.add.at(sums[:, j], bucket[finite[:, j]], vals[finite[:, j], j])
        np.add.at(counts[:, j], bucket[finite[:, j]], 1.0)
    mask = counts == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(mask, np.nan, sums / np.where(mask, 1.0, counts))
    return start, means, mask


def resample_frame(frame, window):
    """Downsample an existing frame to a coarser ``window`` (seconds)."""
    if window % frame.step:
        raise FrameError("window must be a multiple of the frame step")
    start, means, mask = downsample_mean(frame.times, frame.values, window, start=frame.start_time)
    return FeatureFrame(start, window, frame.variables, means, mask)


def frame_from_block_features(rows, window=DEFAULT_STEP, ticks=None, percentiles=None):
    """Downsample block feature rows (and optional price ticks) onto one grid."""
    if not rows:
        raise FrameError("no block rows")
    if percentiles is None:
        percentiles = sorted(rows[0].pct_gas_price)
    names = list(BLOCK_VARIABLES[:3]) + [f"pct_{p:g}".replace(".", "_") for p in percentiles] \
        + list(BLOCK_VARIABLES[3:])

    def _v(x):
        return np.nan if x is None else float(x)

    ts = np.array([r.timestamp for r in rows], dtype=np.int64)
    data = np.array([[_v(r.min_gas_price), _v(r.max_gas_price), _v(r.avg_gas_price)]
                     + [_v(r.pct_gas_price.get(p)) for p in percentiles]
                     + [r.tx_count, r.contract_count, _v(r.base_fee), _v(r.gas_used),
                        _v(r.size_gas), _v(r.size_bytes)] for r in rows])
    start, means, mask = downsample_mean(ts, data, window)
    if ticks:
        tts = np.array([t.timestamp for t in ticks], dtype=np.int64)
        tvals = np.array([t.open_price for t in ticks])
        _, tmeans, tmask = downsample_mean(tts, tvals, window, start=start,
                                           stop=start + means.shape[0] * window)
        names.append("eth_usdt")
        means = np.hstack([means, tmeans])
        mask = np.hstack([mask, tmask])
    return FeatureFrame(start, window, tuple(names), means, mask)


def truncate_outliers(series, k=2.0):
    """Cap values above ``mean + k * std`` (population std); lows are untouched."""
    x = np.asarray(series, dtype=float)
    mu, sigma = x.mean(), x.std()
    if sigma == 0:
        warnings.warn("constant series; outlier truncation skipped", RuntimeWarning, stacklevel=2)
        return x.copy()
    return np.minimum(x, mu + k * sigma)


@dataclass(frozen=True)
class ZScoreParams:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "std", np.atleast_1d(np.asarray(self.std, dtype=float)))

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["mean"], d["std"])


def zscore_fit(series):
    """Fit per-column mean and population std, ignoring NaN gaps."""
    x = np.asarray(series, dtype=float)
    mu = np.nanmean(x, axis=0)
    sigma = np.nanstd(x, axis=0)
    if np.any(~(sigma > 0)):
        raise FrameError("zero variance: cannot z-score a constant series")
    return ZScoreParams(mu, sigma)


def zscore_apply(series, params):
    return (np.asarray(series, dtype=float) - params.mean) / params.std


def zscore_invert(series, params):
    return np.asarray(series, dtype=float) * params.std + params.mean


@dataclass(frozen=True)
class WindowedDataset:
    """Sliding ``(n inputs -> H targets)`` examples over a value matrix.

    ``starts[k]`` is the first input row of example ``k``; its targets are the
    ``target`` column at rows ``starts[k] + n .. starts[k] + n + H - 1``.
    Inputs are materialized on demand so large frames stay cheap.
    """

    values: np.ndarray
    n: int
    H: int
    target: int
    starts: np.ndarray
    variables: tuple = ()
    start_time: int = 0
    step: int = DEFAULT_STEP
    dropped: int = 0

    def __len__(self):
        return len(self.starts)

    @property
    def target_name(self):
        return self.variables[self.target] if self.variables else str(self.target)

    def inputs(self, sel=None):
        starts = self.starts if sel is None else self.starts[sel]
        idx = starts[:, None] + np.arange(self.n)
        return self.values[idx]

    def targets(self, sel=None):
        starts = self.starts if sel is None else self.starts[sel]
        idx = starts[:, None] + self.n + np.arange(self.H)
        return self.values[idx, self.target]

    def target_times(self, sel=None):
        starts = self.starts if sel is None else self.starts[sel]
        return self.start_time + self.step * (starts[:, None] + self.n + np.arange(self.H))

    def subset(self, sel):
        return WindowedDataset(self.values, self.n, self.H, self.target, self.starts[sel],
                               self.variables, self.start_time, self.step, 0)

    def with_values(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != self.values.shape:
            raise FrameError("replacement values must keep the frame shape")
        return WindowedDataset(values, self.n, self.H, self.target, self.starts,
                               self.variables, self.start_time, self.step, self.dropped)

    def covered_rows(self):
        """Sorted unique frame rows touched by any example (inputs and targets)."""
        if len(self) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.arange(self.starts.min(), self.starts.max() + self.n + self.H)


def make_windows(frame, n, H, target):
    """Enumerate chronological examples, dropping any that touch a gap.

    An input window is invalid if any variable is masked on any of its rows;
    a target window is invalid if the target variable is masked.
    """
    if n < 1 or H < 1:
        raise FrameError("n and H must be >= 1")
    T = len(frame)
    if n + H > T:
        raise FrameError(f"n + H = {n + H} exceeds frame length {T}")
    t = frame.index(target) if isinstance(target, str) else int(target)
    row_bad = frame.gap_mask.any(axis=1).astype(np.int64)
    tgt_bad = frame.gap_mask[:, t].astype(np.int64)
    cum_row = np.concatenate([[0], np.cumsum(row_bad)])
    cum_tgt = np.concatenate([[0], np.cumsum(tgt_bad)])
    s = np.arange(T - n - H + 1)
    ok = (cum_row[s + n] - cum_row[s] == 0) & (cum_tgt[s + n + H] - cum_tgt[s + n] == 0)
    starts = s[ok]
    dropped = int((~ok).sum())
    if dropped:
        logger.info("dropped %d window(s) overlapping gaps", dropped)
    return WindowedDataset(np.asarray(frame.values), n, H, t, starts, frame.variables,
                           frame.start_time, frame.step, dropped)


def split_70_30(dataset, fraction=0.7):
    """Chronological split: the first ``floor(0.7 * N)`` examples train."""
    N = len(dataset)
    if N < 10:
        raise FrameError(f"need at least 10 examples to split, have {N}")
    k = int(math.floor(fraction * N))
    return dataset.subset(slice(0, k)), dataset.subset(slice(k, N))


@dataclass(frozen=True)
class WalkWindow:
    start: int
    stop: int
    split: int

    @property
    def train(self):
        return (self.start, self.split)

    @property
    def validation(self):
        return (self.split, self.stop)


@dataclass(frozen=True)
class WalkForwardPlan:
    train_span: int
    stride: int
    windows: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.windows)


def walk_forward(frame_or_length, train_span, stride, fraction=0.7):
    """Windows of ``train_span`` rows advanced by ``stride`` until the frame end.

    Each window carries a row-level 70:30 boundary; the example-level split
    inside a window is done with :func:`split_70_30`.
    """
    T = frame_or_length if isinstance(frame_or_length, (int, np.integer)) else len(frame_or_length)
    if train_span < 1 or stride < 1:
        raise FrameError("train_span and stride must be positive")
    if train_span > T:
        raise FrameError(f"train_span {train_span} exceeds series length {T}")
    count = (T - train_span) // stride + 1
    wins = tuple(WalkWindow(k * stride, k * stride + train_span,
                            k * stride + int(math.floor(fraction * train_span)))
                 for k in range(count))
    return WalkForwardPlan(train_span, stride, wins)


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    mae: float
    mape: float
    r2: Optional[float]
    per_lookahead: dict = field(default_factory=dict)

    def row(self):
        return (self.rmse, self.mae, self.mape, self.r2)


def _scores(y, p):
    e = p - y
    rmse = float(np.sqrt(np.mean(e * e)))
    mae = float(np.mean(np.abs(e)))
    mape = float(np.mean(np.abs(e) / np.maximum(np.abs(y), MAPE_EPS)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = None if ss_tot == 0 else 1.0 - float(np.sum(e * e)) / ss_tot
    return rmse, mae, mape, r2


def metrics(y_true, y_pred):
    """RMSE, MAE, MAPE and R^2.

    2-D inputs of shape (N, H) also get a per-lookahead breakdown keyed
    1..H; the headline numbers then pool every cell.
    """
    y = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if y.shape != p.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {p.shape}")
    if y.size == 0:
        raise ValueError("metrics of empty input")
    per = {}
    if y.ndim == 2:
        for h in range(y.shape[1]):
            per[h + 1] = MetricReport(*_scores(y[:, h], p[:, h]))
    return MetricReport(*_scores(y.ravel(), p.ravel()), per_lookahead=per)


def save_frame(frame, path):
    """Write ``path`` (comma-delimited, empty cells for gaps) and ``path.meta``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("timestamp",) + frame.variables)
        for t, row, m in zip(frame.times, frame.values, frame.gap_mask):
            w.writerow([int(t)] + ["" if mi else repr(float(v)) for v, mi in zip(row, m)])
    meta = {"start_time": frame.start_time, "step": frame.step, "variables": ",".join(frame.variables),
            "rows": len(frame)}
    Path(str(path) + ".meta").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))


def read_meta(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_frame(path):
    path = Path(path)
    meta_path = Path(str(path) + ".meta")
    if not path.is_file() or not meta_path.is_file():
        raise FrameError(f"{path}: frame file or its .meta sidecar is missing")
    meta = read_meta(meta_path)
    variables = tuple(meta["variables"].split(","))
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[1:]) != variables:
            raise FrameError(f"{path}: header disagrees with metadata variables")
        rows = [[float(c) if c != "" else np.nan for c in r[1:]] for r in reader]
    values = np.array(rows, dtype=float).reshape(-1, len(variables))
    return FeatureFrame(int(meta["start_time"]), int(meta["step"]), variables, values,
                        ~np.isfinite(values))
