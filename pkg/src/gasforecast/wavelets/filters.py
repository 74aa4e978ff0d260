"""Named two-channel filter banks.

db4 coefficients are the 8-tap Daubechies minimum-phase filter (4 vanishing
moments), obtained by spectral factorization in 50-digit arithmetic and
rounded to double; even-shift orthogonality then holds to about 1e-17. bior3.3 is built from its exact rational form:
analysis low-pass sqrt(2)/64 * [3, -9, -7, 45, 45, -7, -9, 3] and synthesis
low-pass sqrt(2)/8 * [1, 3, 3, 1] centred in 8 taps. The test suite checks
perfect reconstruction rather than trusting these tables.
"""

from dataclasses import dataclass

import numpy as np

_DB4_DEC_LO = (
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
)

_SQRT2 = np.sqrt(2.0)
_BIOR33_DEC_LO = _SQRT2 / 64.0 * np.array([3.0, -9.0, -7.0, 45.0, 45.0, -7.0, -9.0, 3.0])
_BIOR33_REC_LO = _SQRT2 / 8.0 * np.array([0.0, 0.0, 1.0, 3.0, 3.0, 1.0, 0.0, 0.0])


@dataclass(frozen=True)
class WaveletFilterBank:
    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @property
    def length(self):
        return len(self.dec_lo)


def _alternate(f, first_sign):
    signs = first_sign * (-1.0) ** np.arange(len(f))
    return signs * f


def biorthogonal_bank(name, dec_lo, rec_lo):
    """Complete a bank from its two low-pass filters (quadrature mirror rule)."""
    dec_lo = np.asarray(dec_lo, dtype=float)
    rec_lo = np.asarray(rec_lo, dtype=float)
    return WaveletFilterBank(name, dec_lo, _alternate(rec_lo, -1.0), rec_lo, _alternate(dec_lo, 1.0))


def orthogonal_bank(name, dec_lo):
    dec_lo = np.asarray(dec_lo, dtype=float)
    return biorthogonal_bank(name, dec_lo, dec_lo[::-1])


_BANKS = {
    "db4": orthogonal_bank("db4", _DB4_DEC_LO),
    "bior3.3": biorthogonal_bank("bior3.3", _BIOR33_DEC_LO, _BIOR33_REC_LO),
}


def get_bank(name):
    if isinstance(name, WaveletFilterBank):
        return name
    key = str(name).lower().replace(" ", "")
    if key not in _BANKS:
        raise ValueError(f"unknown wavelet {name!r}; available: {', '.join(sorted(_BANKS))}")
    return _BANKS[key]


def available():
    return sorted(_BANKS)
