import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gasforecast.ingest import BlockFeatureRow, TickRecord
from gasforecast.series import (FeatureFrame, FrameError, ZScoreParams, downsample_mean,
                                frame_from_block_features, load_frame, make_windows, metrics,
                                resample_frame, save_frame, split_70_30, truncate_outliers,
                                walk_forward, zscore_apply, zscore_fit, zscore_invert)


def naive_scores(y, p):
    n = len(y)
    se = ae = ape = 0.0
    for a, b in zip(y, p):
        se += (b - a) ** 2
        ae += abs(b - a)
        ape += abs(b - a) / max(abs(a), 1e-8)
    mean = sum(y) / n
    tot = sum((a - mean) ** 2 for a in y)
    return math.sqrt(se / n), ae / n, ape / n, 1 - se / tot


def test_metrics_against_naive_loop(rng):
    for _ in range(100):
        n = int(rng.integers(2, 200))
        y = rng.uniform(1, 200, n)
        p = y + rng.normal(0, 10, n)
        got = metrics(y, p)
        want = naive_scores(y, p)
        for g, w in zip(got.row(), want):
            assert abs(g - w) <= 1e-12 * max(1.0, abs(w))


def test_metrics_edge_cases():
    y = np.array([1.0, 2.0, 3.0])
    assert metrics(y, y).r2 == 1.0 and metrics(y, y).rmse == 0.0
    assert metrics([5.0, 5.0], [5.0, 6.0]).r2 is None
    with pytest.raises(ValueError, match="length mismatch"):
        metrics([1.0, 2.0], [1.0])
    per = metrics(np.ones((4, 2)) * [[1, 2]] + np.arange(4)[:, None],
                  np.ones((4, 2)) * [[1, 2]] + np.arange(4)[:, None]).per_lookahead
    assert sorted(per) == [1, 2]


def test_downsample_bucket_edges():
    ts = np.array([0, 299, 300, 900])
    start, means, mask = downsample_mean(ts, np.array([1.0, 3.0, 10.0, 7.0]), 300)
    assert start == 0
    np.testing.assert_array_equal(mask[:, 0], [False, False, True, False])
    np.testing.assert_allclose(means[[0, 1, 3], 0], [2.0, 10.0, 7.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 5000), min_size=1, max_size=60), st.integers(1, 700))
def test_downsample_property(times, window):
    ts = np.array(sorted(times))
    vals = np.arange(len(ts), dtype=float)
    start, means, mask = downsample_mean(ts, vals, window)
    for k in range(means.shape[0]):
        members = vals[(ts >= start + k * window) & (ts < start + (k + 1) * window)]
        if members.size:
            assert means[k, 0] == pytest.approx(members.mean())
        else:
            assert mask[k, 0]


def _rows():
    return [BlockFeatureRow(i, 13 * i, 10.0 + i, 20.0 + i, 15.0 + i, {5.0: 11.0, 95.0: 19.0}, 3, 1,
                            8.0, 100.0, 200.0, 1000.0) for i in range(100)]


def test_frame_from_block_features_and_ticks():
    ticks = [TickRecord(60 * k, 3000.0 + k) for k in range(20)]
    fr = frame_from_block_features(_rows(), 300, ticks)
    assert fr.variables[:5] == ("min_gas_price", "max_gas_price", "avg_gas_price", "pct_5", "pct_95")
    assert fr.variables[-1] == "eth_usdt"
    # 13 s blocks: bucket 0 holds blocks 0..23
    assert fr.column("min_gas_price")[0] == pytest.approx(np.mean(10.0 + np.arange(24)))
    assert fr.column("eth_usdt")[0] == pytest.approx(3002.0)
    assert fr.gap_mask[-1, -1]


def test_frame_is_immutable_and_resamples():
    fr = FeatureFrame.from_columns(0, 300, {"a": np.arange(6.0)})
    with pytest.raises(ValueError):
        fr.values[0, 0] = 1.0
    r = resample_frame(fr, 600)
    np.testing.assert_allclose(r.column("a"), [0.5, 2.5, 4.5])
    with pytest.raises(FrameError):
        resample_frame(fr, 450)


def test_truncate_one_sided():
    x = np.array([1.0] * 20 + [100.0])
    out = truncate_outliers(x, 2.0)
    cap = x.mean() + 2 * x.std()
    assert out[-1] == pytest.approx(cap) and np.all(out[:-1] == 1.0)
    low = np.array([100.0] * 20 + [-100.0])
    np.testing.assert_array_equal(truncate_outliers(low), low)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        truncate_outliers(np.ones(5))
    assert w and "constant" in str(w[0].message)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 50), st.integers(1, 4)),
              elements=st.floats(-1e3, 1e3)))
def test_zscore_round_trip(x):
    if np.any(x.std(axis=0) < 1e-6):
        return
    p = zscore_fit(x)
    z = zscore_apply(x, p)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(zscore_invert(z, p), x, atol=1e-9 * max(1, np.abs(x).max()))
    assert ZScoreParams.from_dict(p.to_dict()).mean.tolist() == p.mean.tolist()


def test_zscore_constant_fails():
    with pytest.raises(FrameError, match="zero variance"):
        zscore_fit(np.ones((5, 1)))


def brute_windows(mask, n, H, t):
    out = []
    for s in range(mask.shape[0] - n - H + 1):
        if mask[s:s + n].any() or mask[s + n:s + n + H, t].any():
            continue
        out.append(s)
    return out


@settings(max_examples=100, deadline=None)
@given(st.integers(12, 60), st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_windows_match_brute_force(T, n, H, seed):
    r = np.random.default_rng(seed)
    vals = r.normal(size=(T, 2))
    vals[r.random((T, 2)) < 0.08] = np.nan
    fr = FeatureFrame(0, 300, ("a", "b"), vals, np.isnan(vals))
    if n + H > T:
        return
    ds = make_windows(fr, n, H, "a")
    assert ds.starts.tolist() == brute_windows(fr.gap_mask, n, H, 0)
    assert ds.dropped == (T - n - H + 1) - len(ds)
    if len(ds):
        x, y = ds.inputs(), ds.targets()
        k = len(ds) // 2
        s = ds.starts[k]
        np.testing.assert_array_equal(x[k], vals[s:s + n])
        np.testing.assert_array_equal(y[k], vals[s + n:s + n + H, 0])
        assert np.all(ds.target_times()[k] == 300 * (s + n + np.arange(H)))


def test_windows_reject_long_horizon():
    fr = FeatureFrame.from_columns(0, 300, {"a": np.arange(5.0)})
    with pytest.raises(FrameError, match="exceeds"):
        make_windows(fr, 4, 2, "a")


def test_split_is_chronological():
    fr = FeatureFrame.from_columns(0, 300, {"a": np.arange(40.0)})
    ds = make_windows(fr, 3, 2, "a")
    tr, va = split_70_30(ds)
    assert len(tr) == math.floor(0.7 * len(ds)) and len(tr) + len(va) == len(ds)
    assert tr.starts.max() < va.starts.min()
    with pytest.raises(FrameError, match="at least 10"):
        split_70_30(make_windows(FeatureFrame.from_columns(0, 1, {"a": np.arange(10.0)}), 2, 1, "a"))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 2000), st.integers(1, 500), st.integers(1, 300))
def test_walk_forward_count(T, span, stride):
    if span > T:
        with pytest.raises(FrameError):
            walk_forward(T, span, stride)
        return
    plan = walk_forward(T, span, stride)
    assert len(plan) == (T - span) // stride + 1
    last = plan.windows[-1]
    assert last.stop <= T and last.stop + stride > T
    assert all(w.split == w.start + math.floor(0.7 * span) for w in plan.windows)


def test_frame_save_load(tmp_path):
    vals = np.array([[1.5, np.nan], [2.25, 3.0]])
    fr = FeatureFrame(600, 300, ("a", "b"), vals, np.isnan(vals))
    save_frame(fr, tmp_path / "f.csv")
    back = load_frame(tmp_path / "f.csv")
    assert back.start_time == 600 and back.variables == ("a", "b")
    np.testing.assert_array_equal(back.gap_mask, fr.gap_mask)
    np.testing.assert_array_equal(back.values[~back.gap_mask], vals[~np.isnan(vals)])
