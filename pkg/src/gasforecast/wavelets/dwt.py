"""Multi-level discrete wavelet transform with hard-threshold denoising."""

import math
from dataclasses import dataclass, field

import numpy as np

from .filters import get_bank

BOUNDARY_MODE = "symmetric"


class DwtError(ValueError):
    pass


@dataclass(frozen=True)
class DwtDecomposition:
    """``approx`` is A_J; ``details[j - 1]`` is D_j (D_1 is the finest)."""

    approx: np.ndarray
    details: tuple
    lengths: tuple
    wavelet: str
    mode: str = BOUNDARY_MODE

    @property
    def level(self):
        return len(self.details)

    @property
    def original_length(self):
        return self.lengths[0]


@dataclass(frozen=True)
class ThresholdParams:
    lam: float
    levels: tuple
    mad: dict = field(default_factory=dict)
    sigma: dict = field(default_factory=dict)
    threshold: dict = field(default_factory=dict)


def _symmetric_extend(x, pad):
    """Half-sample symmetric extension: ``x[-1] = x[0]``, ``x[N] = x[N-1]``."""
    N = len(x)
    idx = np.arange(-pad, N + pad) % (2 * N)
    idx = np.where(idx >= N, 2 * N - 1 - idx, idx)
    return x[idx]


def _analysis(x, bank):
    F = bank.length
    N = len(x)
    xe = _symmetric_extend(x, F - 1)
    keep = 2 * np.arange((N + F - 1) // 2) + F
    return np.convolve(xe, bank.dec_lo)[keep], np.convolve(xe, bank.dec_hi)[keep]


def _synthesis(a, d, bank, out_len):
    F = bank.length
    u = np.zeros(2 * len(a))
    v = np.zeros(2 * len(d))
    u[::2] = a
    v[::2] = d
    y = np.convolve(u, bank.rec_lo) + np.convolve(v, bank.rec_hi)
    return y[F - 2:F - 2 + out_len]


def max_level(length, wavelet):
    """Deepest level whose every input is at least one filter long."""
    F = get_bank(wavelet).length
    level, n = 0, int(length)
    while n >= F:
        level += 1
        n = (n + F - 1) // 2
    return level


def dwt_decompose(signal, wavelet="db4", level=1):
    bank = get_bank(wavelet)
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise DwtError("signal must be one-dimensional")
    deepest = max_level(len(x), bank)
    if level < 1 or level > deepest:
        raise DwtError(f"level {level} infeasible for length {len(x)} with {bank.name}; "
                       f"max feasible depth is {deepest}")
    details, lengths = [], []
    a = x
    for _ in range(level):
        lengths.append(len(a))
        a, d = _analysis(a, bank)
        details.append(d)
    return DwtDecomposition(a, tuple(details), tuple(lengths), bank.name)


def dwt_reconstruct(dec, wavelet=None):
    bank = get_bank(wavelet if wavelet is not None else dec.wavelet)
    if bank.name != dec.wavelet:
        raise DwtError(f"decomposition was made with {dec.wavelet}, not {bank.name}")
    if dec.mode != BOUNDARY_MODE:
        raise DwtError(f"unsupported boundary mode {dec.mode!r}")
    a = dec.approx
    for d, n in zip(reversed(dec.details), reversed(dec.lengths)):
        a = _synthesis(a, d, bank, n)
    return a


def mean_absolute_deviation(x):
    x = np.asarray(x, dtype=float)
    return float(np.mean(np.abs(x - x.mean())))


def level_threshold(detail, lam):
    """Universal-style threshold for one detail band.

    MAD about the band mean, scaled down by the denoising factor ``lam``,
    times ``sqrt(3 ln #D)``. Larger ``lam`` means a smaller threshold.
    """
    mad = mean_absolute_deviation(detail)
    sigma = mad / lam
    return mad, sigma, sigma * math.sqrt(3.0 * math.log(len(detail)))


def hard_threshold_denoise(signal, wavelet="db4", level=2, levels=(1, 2), lam=3.0):
    """Zero detail coefficients below their band threshold and reconstruct.

    Returns ``(denoised, ThresholdParams)``.
    """
    if not lam > 0:
        raise DwtError("denoising factor lambda must be positive")
    levels = tuple(sorted(set(int(j) for j in levels)))
    if not levels or levels[0] < 1 or levels[-1] > level:
        raise DwtError(f"threshold levels {levels} not within 1..{level}")
    dec = dwt_decompose(signal, wavelet, level)
    details = list(dec.details)
    mad, sig, thr = {}, {}, {}
    for j in levels:
        d = details[j - 1]
        mad[j], sig[j], thr[j] = level_threshold(d, lam)
        details[j - 1] = np.where(np.abs(d) < thr[j], 0.0, d)
    out = dwt_reconstruct(DwtDecomposition(dec.approx, tuple(details), dec.lengths, dec.wavelet))
    return out, ThresholdParams(float(lam), levels, mad, sig, thr)


def denoise_report(raw, denoised):
    """RMSE of the removed component and SNR in dB (retained over removed power).

    Identical inputs give ``snr_db = inf``.
    """
    raw = np.asarray(raw, dtype=float)
    den = np.asarray(denoised, dtype=float)
    if raw.shape != den.shape:
        raise ValueError("raw and denoised lengths differ")
    noise = raw - den
    removed = float(np.sum(noise * noise))
    rmse = math.sqrt(removed / raw.size)
    snr = math.inf if removed == 0 else 10.0 * math.log10(float(np.sum(den * den)) / removed)
    return {"rmse": rmse, "snr_db": snr}


def format_report(report):
    return "".join(f"{k}={v!r}\n" for k, v in report.items())
