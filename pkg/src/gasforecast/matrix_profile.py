"""Self-join matrix profile with z-normalized Euclidean distance.

Two routes compute the same profile: :func:`mp_bruteforce` materializes every
z-normalized subsequence and compares all pairs, while :func:`mp_fast` walks
each diagonal of the distance matrix with an O(1) covariance update.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-12


class MatrixProfileError(ValueError):
    pass


@dataclass(frozen=True)
class MatrixProfile:
    values: np.ndarray
    index: np.ndarray
    window: int
    exclusion: int
    flagged: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.values)

    def motif(self):
        """Start of the subsequence with the closest non-trivial neighbour."""
        return int(np.argmin(self.values))

    def discord(self):
        """Start of the subsequence farthest from all others."""
        return int(np.argmax(self.values))


class Snapshot(NamedTuple):
    end: int
    profile: MatrixProfile


def exclusion_radius(m):
    return int(math.ceil(m / 2))


def _validate(series, m):
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise MatrixProfileError("series must be one-dimensional")
    if m < 1:
        raise MatrixProfileError("window must be >= 1")
    if not np.all(np.isfinite(x)):
        raise MatrixProfileError("series contains non-finite values")
    if x.size < 2 * m:
        raise MatrixProfileError(f"series of length {x.size} shorter than 2 * window ({2 * m})")
    return x


def _window_stats(x, m):
    win = sliding_window_view(x, m)
    mu = win.mean(axis=1)
    sigma = np.sqrt(np.mean((win - mu[:, None]) ** 2, axis=1))
    flagged = np.flatnonzero(sigma <= SIGMA_FLOOR)
    if flagged.size:
        logger.info("%d constant window(s); using sigma floor %g", flagged.size, SIGMA_FLOOR)
    return win, mu, sigma, flagged


def _znorm(win, mu, sigma):
    return (win - mu[:, None]) / np.maximum(sigma, SIGMA_FLOOR)[:, None]


def mp_bruteforce(series, m):
    """Reference O(T^2 m) profile: explicit distances between all z-normalized pairs.

    Pairs closer than ``ceil(m / 2)`` positions are trivial matches and are
    excluded. Windows with zero spread are normalized with a 1e-12 std floor
    and reported in ``flagged``.
    """
    x = _validate(series, m)
    win, mu, sigma, flagged = _window_stats(x, m)
    z = _znorm(win, mu, sigma)
    L = z.shape[0]
    r = exclusion_radius(m)
    values = np.empty(L)
    index = np.empty(L, dtype=np.int64)
    pos = np.arange(L)
    for i in range(L):
        d = np.sqrt(np.sum((z - z[i]) ** 2, axis=1))
        d[np.abs(pos - i) <= r] = np.inf
        j = int(np.argmin(d))
        values[i], index[i] = d[j], j
    return MatrixProfile(values, index, m, r, tuple(int(i) for i in flagged))


def mp_fast(series, m):
    """O(T^2) profile by streaming covariance updates along each diagonal.

    For diagonal ``k`` the centred covariance of windows ``(i, i + k)`` obeys
    ``c[i+1] = c[i] + df[i] * dg[i+k] + df[i+k] * dg[i]`` with
    ``df[i] = (x[i+m] - x[i]) / 2`` and
    ``dg[i] = (x[i+m] - mu[i+1]) + (x[i] - mu[i])``, which avoids the
    cancellation of the raw dot-product form on series with a large offset.
    """
    x = _validate(series, m)
    win, mu, sigma, flagged = _window_stats(x, m)
    L = win.shape[0]
    r = exclusion_radius(m)
    df = 0.5 * (x[m:] - x[:L - 1])
    dg = (x[m:] - mu[1:]) + (x[:L - 1] - mu[:L - 1])
    centred = win - mu[:, None]
    inv = 1.0 / (math.sqrt(m) * np.maximum(sigma, SIGMA_FLOOR))
    is_flat = np.zeros(L, dtype=bool)
    is_flat[flagged] = True

    values = np.full(L, np.inf)
    index = np.full(L, -1, dtype=np.int64)
    for k in range(r + 1, L):
        n = L - k
        cov = np.empty(n)
        cov[0] = np.dot(centred[0], centred[k])
        if n > 1:
            np.cumsum(df[:n - 1] * dg[k:k + n - 1] + df[k:k + n - 1] * dg[:n - 1], out=cov[1:])
            cov[1:] += cov[0]
        rho = cov * inv[:n] * inv[k:]
        d = np.sqrt(np.maximum(2.0 * m * (1.0 - rho), 0.0))
        if flagged.size:
            d[is_flat[:n] | is_flat[k:]] = np.inf
        # row side: profile[i] against j = i + k
        better = d < values[:n]
        values[:n][better] = d[better]
        index[:n][better] = np.flatnonzero(better) + k
        # column side: profile[j] against i = j - k; ties keep the smaller index
        better = d <= values[k:]
        better &= (d < values[k:]) | (np.arange(n) < index[k:])
        values[k:][better] = d[better]
        index[k:][better] = np.flatnonzero(better)

    if flagged.size:
        # pairs touching a constant window were masked above; evaluate them exactly
        z = _znorm(win, mu, sigma)
        pos = np.arange(L)
        for f in flagged:
            d = np.sqrt(np.sum((z - z[f]) ** 2, axis=1))
            d[np.abs(pos - f) <= r] = np.inf
            better = (d < values) | ((d == values) & (f < index))
            values[better] = d[better]
            index[better] = f
            j = int(np.argmin(d))
            if d[j] < values[f] or (d[j] == values[f] and j < index[f]):
                values[f], index[f] = d[j], j
    return MatrixProfile(values, index, m, r, tuple(int(i) for i in flagged))


def mp_rolling(series, m, step):
    """Profiles of growing prefixes ending every ``step`` samples and at the end.

    Each snapshot sees only its prefix, so no later sample can influence it.
    Prefixes shorter than ``2 m`` are skipped.
    """
    x = np.asarray(series, dtype=float)
    if step < 1:
        raise MatrixProfileError("step must be >= 1")
    ends = list(range(step, x.size + 1, step))
    if not ends or ends[-1] != x.size:
        ends.append(x.size)
    out = []
    for end in ends:
        if end < 2 * m:
            logger.info("prefix ending at %d shorter than 2 * window; snapshot skipped", end)
            continue
        out.append(Snapshot(end, mp_fast(x[:end], m)))
    return out


def align_mp(frame, mp, m=None, name="matrix_profile"):
    """Drop the first ``m - 1`` rows of ``frame`` and append the profile column."""
    m = mp.window if m is None else m
    trimmed = frame.slice(m - 1, len(frame))
    if len(trimmed) != len(mp.values):
        raise MatrixProfileError(f"profile length {len(mp.values)} does not match "
                                 f"{len(trimmed)} frame rows after trimming {m - 1}")
    return trimmed.with_column(name, mp.values)


def reverse_mp(mp):
    return MatrixProfile(mp.values[::-1].copy(), mp.index[::-1].copy(), mp.window, mp.exclusion,
                         mp.flagged)


def save_profile(mp, path):
    with open(path, "w") as fh:
        fh.write(f"# window={mp.window} exclusion={mp.exclusion}\n")
        fh.write("value,neighbor\n")
        for v, j in zip(mp.values, mp.index):
            fh.write(f"{float(v)!r},{int(j)}\n")


def load_profile(path):
    text = Path(path).read_text().splitlines()
    header = dict(kv.split("=") for kv in text[0].lstrip("# ").split())
    rows = [ln.split(",") for ln in text[2:] if ln]
    return MatrixProfile(np.array([float(r[0]) for r in rows]),
                         np.array([int(r[1]) for r in rows], dtype=np.int64),
                         int(header["window"]), int(header["exclusion"]))
