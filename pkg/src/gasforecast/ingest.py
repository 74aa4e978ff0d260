"""Parsing of exported chain and exchange dumps into per-block feature rows.

All inputs are headered comma-delimited text. Gas prices are in gwei.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

TRANSACTION_COLUMNS = ("block_number", "timestamp", "gas_price_gwei", "is_contract")
BLOCK_COLUMNS = ("block_number", "timestamp", "base_fee_gwei", "gas_used", "size_gas", "size_bytes")
TICK_COLUMNS = ("open_time_ms", "open")

DEFAULT_PERCENTILES = (5.0, 95.0)

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n", ""}


class IngestError(ValueError):
    """Raised for unusable input files (missing file, column or ordering)."""


@dataclass(frozen=True)
class TransactionRecord:
    block_number: int
    timestamp: int
    gas_price: float
    is_contract: bool


@dataclass(frozen=True)
class BlockRecord:
    block_number: int
    timestamp: int
    base_fee: Optional[float] = None
    gas_used: Optional[float] = None
    size_gas: Optional[float] = None
    size_bytes: Optional[float] = None


@dataclass(frozen=True)
class BlockFeatureRow:
    block_number: int
    timestamp: int
    min_gas_price: Optional[float]
    max_gas_price: Optional[float]
    avg_gas_price: Optional[float]
    pct_gas_price: dict = field(default_factory=dict)
    tx_count: int = 0
    contract_count: int = 0
    base_fee: Optional[float] = None
    gas_used: Optional[float] = None
    size_gas: Optional[float] = None
    size_bytes: Optional[float] = None


@dataclass(frozen=True)
class TickRecord:
    timestamp: int
    open_price: float


class Reject(NamedTuple):
    line: int
    reason: str


class ParsedTransactions(NamedTuple):
    records: list
    rejects: list


def percentile(values, rank):
    """Percentile by linear interpolation between closest order statistics.

    The rank position is ``rank / 100 * (n - 1)`` on the zero-based sorted
    sample, so rank 0 gives the minimum and rank 100 the maximum.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("percentile of empty sample")
    if not 0.0 <= rank <= 100.0:
        raise ValueError(f"percentile rank {rank} outside [0, 100]")
    return float(np.percentile(arr, rank, method="linear"))


def _open_table(path, required):
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{path}: no such file")
    fh = path.open(newline="")
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        fh.close()
        raise IngestError(f"{path}: missing column(s) {', '.join(missing)}")
    return fh, reader


def _parse_bool(text):
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    text = (text or "").strip()
    if text == "":
        return None
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def parse_transactions(path):
    """Read a transactions dump.

    Malformed rows are not fatal; they come back in ``rejects`` with their
    1-based file line number (the header is line 1).
    """
    records, rejects = [], []
    fh, reader = _open_table(path, TRANSACTION_COLUMNS)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            try:
                block = int(row["block_number"])
                ts = int(float(row["timestamp"]))
                price = float(row["gas_price_gwei"])
                contract = _parse_bool(row["is_contract"])
            except (TypeError, ValueError) as exc:
                rejects.append(Reject(lineno, f"unparseable field: {exc}"))
                continue
            if not math.isfinite(price) or price < 0:
                rejects.append(Reject(lineno, f"invalid gas price {price}"))
                continue
            if block < 0:
                rejects.append(Reject(lineno, f"negative block number {block}"))
                continue
            records.append((block, len(records), TransactionRecord(block, ts, price, contract)))
    if rejects:
        logger.warning("%s: rejected %d malformed row(s)", path, len(rejects))
    records.sort(key=lambda r: (r[0], r[1]))
    return ParsedTransactions([r[2] for r in records], rejects)


def parse_blocks(path):
    """Read a blocks dump; any malformed row is an error (blocks anchor the grid)."""
    out = []
    fh, reader = _open_table(path, BLOCK_COLUMNS)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = BlockRecord(
                    block_number=int(row["block_number"]),
                    timestamp=int(float(row["timestamp"])),
                    base_fee=_optional_float(row["base_fee_gwei"]),
                    gas_used=_optional_float(row["gas_used"]),
                    size_gas=_optional_float(row["size_gas"]),
                    size_bytes=_optional_float(row["size_bytes"]),
                )
            except (TypeError, ValueError) as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from None
            if rec.gas_used is not None and rec.size_gas is not None and rec.gas_used > rec.size_gas:
                raise IngestError(f"{path}:{lineno}: gas_used exceeds size_gas")
            out.append(rec)
    out.sort(key=lambda b: b.block_number)
    for prev, cur in zip(out, out[1:]):
        if cur.block_number == prev.block_number:
            raise IngestError(f"{path}: duplicate block {cur.block_number}")
        if cur.timestamp <= prev.timestamp:
            raise IngestError(f"{path}: timestamps not increasing at block {cur.block_number}")
    return out


def parse_ticks(path):
    """Read minute ticks (``open_time_ms``, ``open``) into :class:`TickRecord`.

    The file must already be in strictly increasing time order; the first
    offending line is named otherwise.
    """
    out = []
    fh, reader = _open_table(path, TICK_COLUMNS)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            try:
                ts = int(float(row["open_time_ms"])) // 1000
                price = float(row["open"])
            except (TypeError, ValueError) as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from None
            if not price > 0:
                raise IngestError(f"{path}:{lineno}: open price must be positive")
            if out and ts == out[-1].timestamp:
                raise IngestError(f"{path}:{lineno}: duplicate timestamp {ts}")
            if out and ts < out[-1].timestamp:
                raise IngestError(f"{path}:{lineno}: timestamp {ts} goes backwards")
            out.append(TickRecord(ts, price))
    return out


def aggregate_block_features(txs, blocks, percentiles=DEFAULT_PERCENTILES):
    """Group transactions by block and compute per-block price statistics.

    Every block in ``blocks`` yields a row. Blocks without transactions get
    ``tx_count == 0`` and ``None`` for every gas-price field so that they
    surface as gaps downstream instead of zero prices.
    """
    for r in percentiles:
        if not 0.0 < r < 100.0:
            raise ValueError(f"percentile rank {r} not in (0, 100)")
    by_block = {b.block_number: [] for b in blocks}
    contracts = {b.block_number: 0 for b in blocks}
    for tx in txs:
        if tx.block_number not in by_block:
            raise IngestError(f"transaction references unknown block {tx.block_number}")
        by_block[tx.block_number].append(tx.gas_price)
        contracts[tx.block_number] += int(tx.is_contract)

    rows = []
    for b in sorted(blocks, key=lambda b: b.block_number):
        prices = by_block[b.block_number]
        if prices:
            arr = np.sort(np.asarray(prices, dtype=float))
            stats = dict(
                min_gas_price=float(arr[0]),
                max_gas_price=float(arr[-1]),
                avg_gas_price=float(arr.mean()),
                pct_gas_price={float(r): percentile(arr, r) for r in percentiles},
            )
        else:
            stats = dict(min_gas_price=None, max_gas_price=None, avg_gas_price=None,
                         pct_gas_price={float(r): None for r in percentiles})
        rows.append(BlockFeatureRow(
            block_number=b.block_number, timestamp=b.timestamp, tx_count=len(prices),
            contract_count=contracts[b.block_number], base_fee=b.base_fee,
            gas_used=b.gas_used, size_gas=b.size_gas, size_bytes=b.size_bytes, **stats,
        ))
    return rows


def _pct_name(rank):
    return f"pct_{rank:g}".replace(".", "_")


def feature_columns(percentiles: Sequence[float] = DEFAULT_PERCENTILES):
    """Fixed column order of the block-features file."""
    return (["block_number", "timestamp", "min_gas_price", "max_gas_price", "avg_gas_price"]
            + [_pct_name(r) for r in percentiles]
            + ["tx_count", "contract_count", "base_fee", "gas_used", "size_gas", "size_bytes"])


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_block_features(rows, path, percentiles=DEFAULT_PERCENTILES):
    cols = feature_columns(percentiles)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(v) for v in (
                r.block_number, r.timestamp, r.min_gas_price, r.max_gas_price, r.avg_gas_price,
                *(r.pct_gas_price.get(float(p)) for p in percentiles),
                r.tx_count, r.contract_count, r.base_fee, r.gas_used, r.size_gas, r.size_bytes)])


def read_block_features(path):
    """Inverse of :func:`write_block_features`; percentile ranks come from the header."""
    fh, reader = _open_table(path, ("block_number", "timestamp", "min_gas_price", "tx_count"))
    with fh:
        pct_cols = [c for c in reader.fieldnames if c.startswith("pct_")]
        ranks = {c: float(c[4:].replace("_", ".")) for c in pct_cols}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append(BlockFeatureRow(
                    block_number=int(row["block_number"]),
                    timestamp=int(row["timestamp"]),
                    min_gas_price=_optional_float(row["min_gas_price"]),
                    max_gas_price=_optional_float(row.get("max_gas_price")),
                    avg_gas_price=_optional_float(row.get("avg_gas_price")),
                    pct_gas_price={ranks[c]: _optional_float(row[c]) for c in pct_cols},
                    tx_count=int(row["tx_count"]),
                    contract_count=int(row.get("contract_count") or 0),
                    base_fee=_optional_float(row.get("base_fee")),
                    gas_used=_optional_float(row.get("gas_used")),
                    size_gas=_optional_float(row.get("size_gas")),
                    size_bytes=_optional_float(row.get("size_bytes")),
                ))
            except (TypeError, ValueError) as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from None
    return rows
