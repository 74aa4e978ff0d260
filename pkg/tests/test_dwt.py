import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gasforecast.wavelets import (DwtError, denoise_report, dwt_decompose, dwt_reconstruct,
                                  get_bank, hard_threshold_denoise, max_level)
from gasforecast.wavelets.dwt import level_threshold, mean_absolute_deviation

WAVELETS = ("db4", "bior3.3")


def naive_analysis(x, f):
    """Direct sum ``c[k] = sum_j f[j] x[2k + 1 - j]`` with half-sample reflection."""
    N, F = len(x), len(f)

    def at(i):
        if i < 0:
            i = -1 - i
        if i >= N:
            i = 2 * N - 1 - i
        return x[i]

    return np.array([sum(f[j] * at(2 * k + 1 - j) for j in range(F))
                     for k in range((N + F - 1) // 2)])


@pytest.mark.parametrize("name", WAVELETS)
def test_analysis_matches_naive_sum(name, rng):
    bank = get_bank(name)
    x = rng.normal(size=37)
    dec = dwt_decompose(x, name, 2)
    a1 = naive_analysis(x, bank.dec_lo)
    np.testing.assert_allclose(dec.details[0], naive_analysis(x, bank.dec_hi), atol=1e-13)
    np.testing.assert_allclose(dec.details[1], naive_analysis(a1, bank.dec_hi), atol=1e-13)
    np.testing.assert_allclose(dec.approx, naive_analysis(a1, bank.dec_lo), atol=1e-13)


def test_db4_filter_identities():
    b = get_bank("db4")
    h, g = b.dec_lo, b.dec_hi
    assert h.sum() == pytest.approx(np.sqrt(2), abs=1e-12)
    for m in range(4):
        shift = np.dot(h[2 * m:], h[:len(h) - 2 * m])
        assert shift == pytest.approx(1.0 if m == 0 else 0.0, abs=1e-15)
    k = np.arange(8)
    for p in range(4):
        assert np.dot(k ** p, g) == pytest.approx(0.0, abs=1e-9)


def test_bior33_biorthogonality():
    b = get_bank("bior3.3")
    h, ht = b.dec_lo, b.rec_lo
    assert h.sum() == pytest.approx(np.sqrt(2)) and ht.sum() == pytest.approx(np.sqrt(2))
    for m in range(-3, 4):
        s = sum(h[k] * ht[k + 2 * m] for k in range(8) if 0 <= k + 2 * m < 8)
        assert s == pytest.approx(1.0 if m == 0 else 0.0, abs=1e-12)


@pytest.mark.parametrize("name", WAVELETS)
@pytest.mark.parametrize("n", (64, 257, 1024))
def test_perfect_reconstruction(name, n, rng):
    x = rng.normal(size=n) * 50 + 100
    for J in range(1, 5):
        rec = dwt_reconstruct(dwt_decompose(x, name, J))
        assert rec.shape == x.shape
        assert np.max(np.abs(rec - x)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(8, 300), st.sampled_from(WAVELETS), st.integers(0, 2**31 - 1))
def test_reconstruction_property(n, name, seed):
    x = np.random.default_rng(seed).normal(size=n)
    J = max_level(n, name)
    dec = dwt_decompose(x, name, J)
    assert np.max(np.abs(dwt_reconstruct(dec) - x)) < 1e-10
    assert [len(d) for d in dec.details] == [(m + 7) // 2 for m in dec.lengths]


def test_infeasible_level_names_depth():
    with pytest.raises(DwtError, match="max feasible depth is 2"):
        dwt_decompose(np.zeros(10), "db4", 3)
    with pytest.raises(DwtError, match="not bior3.3"):
        dwt_reconstruct(dwt_decompose(np.zeros(16), "db4", 1), "bior3.3")
    with pytest.raises(ValueError, match="unknown wavelet"):
        get_bank("haar")


def test_constant_has_zero_details():
    dec = dwt_decompose(np.full(100, 3.0), "db4", 3)
    for d in dec.details:
        assert np.max(np.abs(d)) < 1e-12


def test_threshold_formula():
    d = np.array([1.0, -2.0, 3.0, 0.5, -0.5, 4.0])
    mad, sigma, u = level_threshold(d, 2.0)
    assert mad == pytest.approx(np.mean(np.abs(d - d.mean())))
    assert sigma == pytest.approx(mad / 2)
    assert u == pytest.approx(sigma * np.sqrt(3 * np.log(6)))
    assert mean_absolute_deviation([2, 2, 2]) == 0


def noisy_signal():
    r = np.random.default_rng(3)
    t = np.arange(1024)
    return 40 + 10 * np.sin(2 * np.pi * t / 288) + r.normal(0, 2, t.size)


@pytest.mark.parametrize("name", WAVELETS)
def test_denoising_monotone_in_lambda(name):
    x = noisy_signal()
    rmse, thr = [], []
    for lam in (1, 2, 3, 5, 10):
        den, params = hard_threshold_denoise(x, name, 2, (1, 2), lam)
        rmse.append(denoise_report(x, den)["rmse"])
        thr.append(params.threshold[1])
    assert all(a >= b for a, b in zip(rmse, rmse[1:]))
    assert all(a > b for a, b in zip(thr, thr[1:]))


def test_denoise_zeroes_below_threshold():
    x = noisy_signal()
    den, p = hard_threshold_denoise(x, "db4", 2, (1,), 3.0)
    d1 = dwt_decompose(den, "db4", 2).details[0]
    kept = np.abs(dwt_decompose(x, "db4", 2).details[0]) >= p.threshold[1]
    # away from the boundary, re-analysis of the reconstruction returns the band
    inner = slice(4, -4)
    assert np.max(np.abs(d1[inner][~kept[inner]])) < 1e-9
    assert 0 < kept.sum() < kept.size


def test_report_identity_and_errors():
    x = noisy_signal()
    rep = denoise_report(x, x)
    assert rep["rmse"] == 0 and rep["snr_db"] == float("inf")
    with pytest.raises(DwtError):
        hard_threshold_denoise(x, "db4", 2, (3,), 3.0)
    with pytest.raises(DwtError):
        hard_threshold_denoise(x, "db4", 2, (1,), 0.0)


def test_reconstruction_runtime():
    r = np.random.default_rng(0)
    t0 = time.perf_counter()
    for name in WAVELETS:
        for n in (64, 257, 1024):
            x = r.normal(size=n)
            for J in range(1, 5):
                dwt_reconstruct(dwt_decompose(x, name, J))
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.parametrize("level", (1, 2, 3))
def test_db4_annihilates_cubics_away_from_edges(level):
    t = np.arange(512, dtype=float) / 512
    x = 3 - 2 * t + 5 * t ** 2 - 4 * t ** 3
    d = dwt_decompose(x, "db4", level).details[level - 1]
    assert np.max(np.abs(d[8:-8])) < 1e-8
