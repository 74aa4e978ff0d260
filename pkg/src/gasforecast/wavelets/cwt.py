"""Morlet continuous wavelet transform and wavelet coherence.

Conventions
-----------
* Mother wavelet ``psi(t) = pi**-0.25 * exp(1j*w0*t) * exp(-t**2/2)``.
* Daughter ``psi_{tau,s}(t) = s**-0.5 * psi((t - tau) / s)``; the transform is
  the discrete inner product ``W(tau, s) = dt * sum_t x(t) conj(psi_{tau,s}(t))``
  with the series zero outside its support.
* Coherence smooths ``W / s`` in time with a Gaussian of standard deviation
  ``s`` (``s / dt`` samples) and across scale with a boxcar spanning 0.6
  octave, both renormalized at the edges so they remain weighted averages.
* Phase is ``atan2(Im, Re)`` of the smoothed cross spectrum ``W_x conj(W_y)``:
  0 means in phase (arrow right), +-pi anti-phase (arrow left), positive
  angles mean x leads y (arrow up), negative that y leads x (arrow down).
* The cone of influence keeps cells whose distance to either end of the
  series is at least the e-folding time ``sqrt(2) * s``.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

OMEGA0 = 6.0
SUBOCTAVES = 8
SCALE_SMOOTH_OCTAVES = 0.6


class CoherenceError(ValueError):
    pass


@dataclass(frozen=True)
class CwtSpectrum:
    """``coefficients`` has shape (len(times), len(scales))."""

    coefficients: np.ndarray
    scales: np.ndarray
    times: np.ndarray
    omega0: float
    dt: float

    @property
    def power(self):
        return np.abs(self.coefficients) ** 2


@dataclass(frozen=True)
class CoherenceMap:
    coherence: np.ndarray
    phase: np.ndarray
    cross_power: np.ndarray
    scales: np.ndarray
    times: np.ndarray
    in_cone: np.ndarray
    coi: np.ndarray

    @property
    def shape(self):
        return self.coherence.shape


def morlet(t, omega0=OMEGA0):
    t = np.asarray(t, dtype=float)
    return np.pi ** -0.25 * np.exp(1j * omega0 * t - 0.5 * t * t)


def fourier_period(scale, omega0=OMEGA0):
    """Equivalent Fourier period of a Morlet scale."""
    return 4.0 * np.pi * np.asarray(scale) / (omega0 + math.sqrt(2.0 + omega0 ** 2))


def default_scales(n, dt=1.0, suboctaves=SUBOCTAVES):
    """Geometric ladder from ``2 dt`` up to ``n dt / 4`` with ``suboctaves`` per octave."""
    s0, smax = 2.0 * dt, n * dt / 4.0
    if smax < s0:
        raise CoherenceError(f"series of length {n} too short for a scale ladder")
    count = int(math.floor(math.log2(smax / s0) * suboctaves + 1e-9)) + 1
    return s0 * 2.0 ** (np.arange(count) / suboctaves)


def _next_fast(n):
    return 1 << (int(n) - 1).bit_length()


def _check_scales(scales):
    scales = np.asarray(scales, dtype=float)
    if scales.ndim != 1 or scales.size == 0:
        raise CoherenceError("scales must be a non-empty 1-D sequence")
    if np.any(scales <= 0):
        raise CoherenceError("scales must be positive")
    if np.any(np.diff(scales) <= 0):
        raise CoherenceError("scales must be increasing")
    return scales


def cwt_morlet(signal, scales=None, omega0=OMEGA0, dt=1.0, method="fft"):
    """Continuous Morlet transform, one column per scale.

    ``method="fft"`` correlates with the full-length daughter kernel via a
    zero-padded FFT; ``method="direct"`` evaluates the sum literally. They
    agree to rounding because the kernel is never truncated.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise CoherenceError("signal must be 1-D with at least two samples")
    if not dt > 0:
        raise CoherenceError("dt must be positive")
    n = x.size
    scales = default_scales(n, dt) if scales is None else _check_scales(scales)
    lags = np.arange(-(n - 1), n) * dt
    out = np.empty((n, scales.size), dtype=complex)
    if method == "fft":
        size = _next_fast(3 * n - 2)
        X = np.fft.fft(x, size)
        for k, s in enumerate(scales):
            kernel = np.conj(morlet(lags / s, omega0)) / math.sqrt(s)
            full = np.fft.ifft(X * np.fft.fft(kernel[::-1], size))
            out[:, k] = dt * full[n - 1:2 * n - 1]
    elif method == "direct":
        t = np.arange(n) * dt
        for k, s in enumerate(scales):
            for j in range(n):
                out[j, k] = dt * np.sum(x * np.conj(morlet((t - t[j]) / s, omega0))) / math.sqrt(s)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CwtSpectrum(out, scales, np.arange(n) * dt, float(omega0), float(dt))


def _smooth_time(field, scales, dt):
    n = field.shape[0]
    out = np.empty_like(field)
    for k, s in enumerate(scales):
        sigma = s / dt
        half = min(n - 1, int(math.ceil(4.0 * sigma)))
        size = _next_fast(n + 2 * half)
        g = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma) ** 2)
        G = np.fft.fft(g, size)
        num = np.fft.ifft(np.fft.fft(field[:, k], size) * G)[half:half + n]
        den = np.fft.ifft(np.fft.fft(np.ones(n), size) * G).real[half:half + n]
        if not np.iscomplexobj(field):
            num = num.real
        out[:, k] = num / den
    return out


def _smooth_scale(field, dj):
    width = max(1, int(round(SCALE_SMOOTH_OCTAVES / dj)))
    if width == 1:
        return field
    box = np.ones(width)
    ns = field.shape[1]
    lo = (width - 1) // 2
    norm = np.convolve(np.ones(ns), box)[lo:lo + ns]
    out = np.empty_like(field)
    for i in range(field.shape[0]):
        out[i] = np.convolve(field[i], box)[lo:lo + ns] / norm
    return out


def _scale_step(scales):
    if scales.size < 2:
        return 1.0
    return float(np.mean(np.diff(np.log2(scales))))


def smooth(field, scales, dt):
    """Time then scale smoothing of a ``(time, scale)`` field."""
    return _smooth_scale(_smooth_time(field, scales, dt), _scale_step(scales))


def cone_of_influence(n, dt, scales):
    """Per-time maximum trustworthy scale and the ``(time, scale)`` in-cone mask."""
    edge = np.minimum(np.arange(n), np.arange(n)[::-1]) * dt
    coi = edge / math.sqrt(2.0)
    return coi, np.sqrt(2.0) * np.asarray(scales)[None, :] <= edge[:, None]


def wavelet_coherence(x, y, scales=None, omega0=OMEGA0, dt=1.0, smoothing=True):
    """Squared wavelet coherence and phase of two equal-length series.

    ``smoothing=False`` drops the smoothing operator; coherence is then
    identically one, which is what makes smoothing essential.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise CoherenceError("x and y must be 1-D with equal lengths")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise CoherenceError("coherence needs gap-free series")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise CoherenceError("zero auto-power: constant input series")
    wx = cwt_morlet(x, scales, omega0, dt)
    wy = cwt_morlet(y, wx.scales, omega0, dt)
    s = wx.scales[None, :]
    wxy = wx.coefficients * np.conj(wy.coefficients)
    cross, px, py = wxy / s, np.abs(wx.coefficients) ** 2 / s, np.abs(wy.coefficients) ** 2 / s
    if smoothing:
        cross = smooth(cross, wx.scales, dt)
        px = smooth(px, wx.scales, dt)
        py = smooth(py, wx.scales, dt)
    denom = px * py
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(denom > 0, np.abs(cross) ** 2 / denom, 0.0)
    coi, in_cone = cone_of_influence(x.size, dt, wx.scales)
    return CoherenceMap(r2, np.arctan2(cross.imag, cross.real), np.abs(wxy), wx.scales,
                        wx.times, in_cone, coi)


def band_summary(cmap, bands=None):
    """Mean in-cone coherence per scale band ``(lo, hi)``; default one band per octave."""
    if bands is None:
        edges = 2.0 ** np.arange(math.floor(math.log2(cmap.scales[0])),
                                 math.ceil(math.log2(cmap.scales[-1])) + 2)
        bands = list(zip(edges[:-1], edges[1:]))
    rows = []
    for lo, hi in bands:
        cols = (cmap.scales >= lo) & (cmap.scales < hi)
        cells = cmap.coherence[:, cols][cmap.in_cone[:, cols]]
        if cells.size:
            rows.append((float(lo), float(hi), float(cells.mean()), int(cells.size)))
    return rows


_HEADER_NOTE = (
    "# phase=atan2(Im,Re) of smoothed cross spectrum x*conj(y); "
    "0 in-phase (arrow right), +-pi anti-phase (arrow left), "
    ">0 x leads (arrow up), <0 y leads (arrow down)\n"
)


def export_coherence(cmap, path):
    """Write one ``(tau, scale, r2, phase, in_cone)`` row per grid cell."""
    path = Path(path)
    nt, ns = cmap.shape
    tau = np.repeat(cmap.times, ns)
    scale = np.tile(cmap.scales, nt)
    with path.open("w", newline="") as fh:
        fh.write(_HEADER_NOTE)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tau", "scale", "r2", "phase", "in_cone"))
        for row in zip(tau, scale, cmap.coherence.ravel(), cmap.phase.ravel(), cmap.in_cone.ravel()):
            w.writerow((repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                        repr(float(row[3])), int(row[4])))
    return path


def read_coherence(path):
    """Parse an exported grid back into ``(times, scales, r2, phase, in_cone)`` matrices."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    rows = list(reader)
    tau = np.array([float(r["tau"]) for r in rows])
    scale = np.array([float(r["scale"]) for r in rows])
    times = np.unique(tau)
    scales = np.unique(scale)
    shape = (times.size, scales.size)
    get = lambda k, f: np.array([f(r[k]) for r in rows]).reshape(shape)  # noqa: E731
    return times, scales, get("r2", float), get("phase", float), get("in_cone", int).astype(bool)
