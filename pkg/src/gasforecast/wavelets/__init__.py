from .filters import WaveletFilterBank, available, get_bank
from .dwt import (DwtDecomposition, DwtError, ThresholdParams, denoise_report, dwt_decompose,
                  dwt_reconstruct, hard_threshold_denoise, max_level)
from .cwt import (CoherenceError, CoherenceMap, CwtSpectrum, band_summary, cone_of_influence,
                  cwt_morlet, default_scales, export_coherence,
                  read_coherence, wavelet_coherence)

__all__ = [
    "WaveletFilterBank", "available", "get_bank",
    "DwtDecomposition", "DwtError", "ThresholdParams", "denoise_report", "dwt_decompose",
    "dwt_reconstruct", "hard_threshold_denoise", "max_level",
    "CoherenceError", "CoherenceMap", "CwtSpectrum", "band_summary", "cone_of_influence",
    "cwt_morlet", "default_scales", "export_coherence",
    "read_coherence", "wavelet_coherence",
]
