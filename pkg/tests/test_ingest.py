import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gasforecast.ingest import (IngestError, aggregate_block_features, feature_columns,
                                parse_blocks, parse_ticks, parse_transactions, percentile,
                                read_block_features, write_block_features)

from conftest import write_text


def hand_percentile(values, rank):
    """Order-statistic interpolation written out by hand."""
    s = sorted(values)
    pos = rank / 100.0 * (len(s) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


@pytest.fixture
def dumps(tmp_path):
    tx = write_text(tmp_path / "tx.csv", [
        "block_number,timestamp,gas_price_gwei,is_contract",
        "2,1012,30,1",
        "1,1000,10,0",
        "1,1001,20,true",
        "1,1002,40,0",
        "bad,1003,5,0",
        "2,1013,-1,0",
        "1,1004,oops,0",
    ])
    blocks = write_text(tmp_path / "blocks.csv", [
        "block_number,timestamp,base_fee_gwei,gas_used,size_gas,size_bytes",
        "1,1000,8.5,100,200,3000",
        "2,1012,9.0,150,200,3100",
        "3,1030,9.5,0,200,500",
    ])
    return tx, blocks


def test_percentile_matches_hand_rule():
    vals = list(range(1, 21))
    assert percentile(vals, 60) == pytest.approx(12.4, abs=1e-12)
    assert percentile([7.0], 35) == 7.0
    assert percentile([1, 2, 3, 4], 0) == 1 and percentile([1, 2, 3, 4], 100) == 4


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40),
       st.floats(0, 100))
def test_percentile_property(values, rank):
    assert percentile(values, rank) == pytest.approx(hand_percentile(values, rank), rel=1e-9, abs=1e-6)
    assert min(values) <= percentile(values, rank) <= max(values)


def test_rejects_carry_line_numbers(dumps):
    tx, _ = dumps
    parsed = parse_transactions(tx)
    assert [r.line for r in parsed.rejects] == [6, 7, 8]
    assert [t.block_number for t in parsed.records] == [1, 1, 1, 2]
    assert [t.gas_price for t in parsed.records] == [10, 20, 40, 30]


def test_aggregate_rows(dumps):
    tx, blocks = dumps
    rows = aggregate_block_features(parse_transactions(tx).records, parse_blocks(blocks))
    assert len(rows) == 3
    b1, b2, b3 = rows
    assert (b1.min_gas_price, b1.max_gas_price) == (10, 40)
    assert b1.avg_gas_price == pytest.approx(70 / 3)
    assert b1.pct_gas_price[5.0] == pytest.approx(hand_percentile([10, 20, 40], 5))
    assert b1.tx_count == 3 and b1.contract_count == 1
    assert b2.tx_count == 1 and b2.contract_count == 1
    assert b3.tx_count == 0 and b3.min_gas_price is None and b3.pct_gas_price[95.0] is None


def test_row_count_matches_independent_count(dumps, tmp_path):
    tx, blocks = dumps
    rows = aggregate_block_features(parse_transactions(tx).records, parse_blocks(blocks))
    out = tmp_path / "features.csv"
    write_block_features(rows, out)
    lines = out.read_text().splitlines()
    n_blocks = len(blocks.read_text().splitlines()) - 1
    assert len(lines) - 1 == n_blocks
    assert lines[0].split(",") == feature_columns()


def test_round_trip(dumps, tmp_path):
    tx, blocks = dumps
    rows = aggregate_block_features(parse_transactions(tx).records, parse_blocks(blocks),
                                    (5.0, 50.0, 95.0))
    out = tmp_path / "f.csv"
    write_block_features(rows, out, (5.0, 50.0, 95.0))
    assert read_block_features(out) == rows


def test_missing_file_and_columns(tmp_path):
    with pytest.raises(IngestError, match="no such file"):
        parse_transactions(tmp_path / "nope.csv")
    bad = write_text(tmp_path / "b.csv", ["block_number,timestamp", "1,2"])
    with pytest.raises(IngestError, match="missing column"):
        parse_blocks(bad)


def test_block_checks(tmp_path):
    head = "block_number,timestamp,base_fee_gwei,gas_used,size_gas,size_bytes"
    over = write_text(tmp_path / "o.csv", [head, "1,10,1,300,200,1"])
    with pytest.raises(IngestError, match="exceeds"):
        parse_blocks(over)
    back = write_text(tmp_path / "t.csv", [head, "1,10,1,1,2,1", "2,10,1,1,2,1"])
    with pytest.raises(IngestError, match="not increasing"):
        parse_blocks(back)


def test_unknown_block_reference(dumps, tmp_path):
    tx, _ = dumps
    blocks = write_text(tmp_path / "b.csv", [
        "block_number,timestamp,base_fee_gwei,gas_used,size_gas,size_bytes", "1,1000,1,1,2,1"])
    with pytest.raises(IngestError, match="unknown block 2"):
        aggregate_block_features(parse_transactions(tx).records, parse_blocks(blocks))


def test_ticks(tmp_path):
    ok = write_text(tmp_path / "k.csv", ["open_time_ms,open", "60000,3000.5", "120000,3001"])
    ticks = parse_ticks(ok)
    assert [t.timestamp for t in ticks] == [60, 120]
    dup = write_text(tmp_path / "d.csv", ["open_time_ms,open", "60000,1", "60000,2"])
    with pytest.raises(IngestError, match=":3: duplicate"):
        parse_ticks(dup)
    back = write_text(tmp_path / "r.csv", ["open_time_ms,open", "120000,1", "60000,2"])
    with pytest.raises(IngestError, match="backwards"):
        parse_ticks(back)


def test_percentile_rank_validation():
    with pytest.raises(ValueError):
        aggregate_block_features([], [], (0.0,))
    with pytest.raises(ValueError):
        percentile([], 50)
