"""Turn a feature frame into normalized train and validation windows for a strategy."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..matrix_profile import MatrixProfile, align_mp, mp_fast, reverse_mp
from ..series import FrameError, make_windows, split_70_30, truncate_outliers, zscore_fit
from ..wavelets import hard_threshold_denoise

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Prepared:
    frame: object
    train: object
    val: object
    norm: object
    profile: Optional[MatrixProfile] = None


def _replace_valid(frame, name, fn):
    """Apply ``fn`` to the observed cells of column ``name``, keeping gaps."""
    col = frame.column(name)
    ok = np.isfinite(col)
    out = col.copy()
    out[ok] = fn(col[ok])
    return frame.replace_column(name, out)


def _contiguous(frame, name, what):
    col = frame.column(name)
    if not np.all(np.isfinite(col)):
        raise FrameError(f"{what} needs a gap-free {name!r} column")
    return col


def preprocess(frame, spec, truncate_k=2.0):
    """Select variables, cap target outliers, denoise the target and append the profile.

    Returns ``(frame, profile)``. The denoised series replaces the target
    column, so it feeds both the inputs and the training targets.
    """
    frame = frame.select(spec.variables)
    if truncate_k is not None:
        frame = _replace_valid(frame, spec.target, lambda v: truncate_outliers(v, truncate_k))
    if spec.denoise_wavelet:
        col = _contiguous(frame, spec.target, "denoising")
        den, _ = hard_threshold_denoise(col, spec.denoise_wavelet, max(spec.denoise_levels),
                                     spec.denoise_levels, spec.denoise_lambda)
        frame = frame.replace_column(spec.target, den)
    profile = None
    if spec.mp:
        col = _contiguous(frame, spec.target, "the matrix profile")
        profile = mp_fast(col, spec.mp_window)
        if spec.mp_reversed:
            profile = reverse_mp(profile)
        frame = align_mp(frame, profile)
    return frame, profile


def prepare(frame, spec, truncate_k=2.0, fraction=0.7):
    """Windows, 70:30 split and a z-score fitted on the training rows only."""
    frame, profile = preprocess(frame, spec, truncate_k)
    ds = make_windows(frame, spec.input_len, spec.horizon, spec.target)
    train, val = split_70_30(ds, fraction)
    rows = train.covered_rows()
    norm = zscore_fit(ds.values[rows])
    values = (ds.values - norm.mean) / norm.std
    return Prepared(frame, train.with_values(values), val.with_values(values), norm, profile)
