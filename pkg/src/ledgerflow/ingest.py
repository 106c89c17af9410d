"""Ledger ingestion: parsing, validation, XRP filters and yearly summaries.

Amounts are carried as integer drops (1 XRP = 10**6 drops) end to end.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from typing import IO, Iterable, Iterator, NamedTuple

log = logging.getLogger(__name__)

DROPS_PER_XRP = 10**6
XRP = "XRP"

FIELDS = (
    "timestamp",
    "source",
    "destination",
    "src_currency",
    "dst_currency",
    "amount_drops",
    "delivered_drops",
)
FORMATS = ("csv", "jsonl")


class LedgerFormatError(ValueError):
    """The stream as a whole does not match the declared format."""


class TransactionRecord(NamedTuple):
    timestamp: datetime
    source: str
    destination: str
    source_currency: str
    destination_currency: str
    amount: int
    delivered_amount: int

    @property
    def day(self) -> date:
        return self.timestamp.date()

    @property
    def year(self) -> int:
        return self.timestamp.year

    @property
    def is_xrp_xrp(self) -> bool:
        return self.source_currency == XRP and self.destination_currency == XRP

    @property
    def is_partial(self) -> bool:
        return self.amount != self.delivered_amount


class MalformedRecord(NamedTuple):
    """Notice for a line that failed validation; parsing carries on past it."""

    line_no: int
    reason: str
    text: str


@dataclass
class FilterReport:
    input_count: int = 0
    kept_count: int = 0
    dropped_non_xrp: int = 0
    dropped_partial: int = 0
    malformed_count: int = 0

    def reconciles(self) -> bool:
        return self.input_count == (
            self.kept_count + self.dropped_non_xrp + self.dropped_partial + self.malformed_count
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


# --- validation -------------------------------------------------------------

def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_timestamp(text: str) -> datetime:
    if len(text) != 20 or text[10] != "T" or text[19] != "Z":
        raise ValueError(f"timestamp not in YYYY-MM-DDThh:mm:ssZ form: {text!r}")
    return datetime.fromisoformat(text[:19] + "+00:00")


_WHITESPACE = re.compile(r"\s")


def _parse_account(text: str, what: str) -> str:
    if not text or _WHITESPACE.search(text):
        raise ValueError(f"bad {what} account id {text!r}")
    return text


_seen_currencies: set[str] = {XRP}


def _parse_currency(text: str) -> str:
    if text in _seen_currencies:
        return text
    if not (3 <= len(text) <= 4 and text.isascii() and text.isalpha()):
        raise ValueError(f"bad currency code {text!r}")
    _seen_currencies.add(text)
    return text


def _parse_drops(value, what: str) -> int:
    # Fractional drops are rejected: the ledger has no sub-drop unit.
    if value.__class__ is str and value.isdigit() and value.isascii():
        return int(value)
    if value.__class__ is int:
        if value < 0:
            raise ValueError(f"negative {what}: {value}")
        return value
    if isinstance(value, str) and value.startswith("-") and value[1:].isdigit():
        raise ValueError(f"negative {what}: {value}")
    raise ValueError(f"bad {what}: {value!r}")


def make_record(fields) -> TransactionRecord:
    """Validate one row of raw field values (in FIELDS order)."""
    ts, src, dst, scur, dcur, amount, delivered = fields
    return TransactionRecord(
        _parse_timestamp(ts),
        _parse_account(src, "source"),
        _parse_account(dst, "destination"),
        _parse_currency(scur),
        _parse_currency(dcur),
        _parse_drops(amount, "amount"),
        _parse_drops(delivered, "delivered amount"),
    )


# --- parsing ----------------------------------------------------------------

def _text_stream(stream) -> Iterable[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _parse_csv(text: Iterable[str]) -> Iterator[TransactionRecord | MalformedRecord]:
    lines = iter(text)
    header = next(lines, None)
    if header is None:
        return
    if tuple(h.strip() for h in next(csv.reader([header]), [])) != FIELDS:
        raise LedgerFormatError(f"unexpected CSV header {header.strip()!r}; expected {','.join(FIELDS)}")
    for line_no, line in enumerate(lines, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        # Canonical rows never need quoting; only quoted lines go through csv.
        row = line.split(",") if '"' not in line else next(csv.reader([line]), [])
        if len(row) != 7:
            yield MalformedRecord(line_no, f"expected 7 fields, got {len(row)}", line)
            continue
        try:
            yield make_record(row)
        except ValueError as exc:
            yield MalformedRecord(line_no, str(exc), line)


def _parse_jsonl(text: Iterable[str]) -> Iterator[TransactionRecord | MalformedRecord]:
    for line_no, line in enumerate(text, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            missing = [k for k in FIELDS if k not in obj]
            if missing:
                raise ValueError(f"missing fields {missing}")
            yield make_record([obj[k] for k in FIELDS])
        except ValueError as exc:  # json.JSONDecodeError is a ValueError
            yield MalformedRecord(line_no, str(exc), line)


def parse_ledger(stream, fmt: str = "csv") -> Iterator[TransactionRecord | MalformedRecord]:
    """Lazily parse a byte (or text) stream of ledger lines.

    Yields records in stream order. Lines that fail validation come out as
    :class:`MalformedRecord` notices; only I/O errors and a wrong CSV header
    stop the iteration.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    text = _text_stream(stream)
    if fmt == "csv":
        return _parse_csv(text)
    return _parse_jsonl(text)


# --- filters ----------------------------------------------------------------

def filter_xrp_xrp(records: Iterable[TransactionRecord]) -> Iterator[TransactionRecord]:
    return (r for r in records if r.source_currency == XRP and r.destination_currency == XRP)


def filter_partial_payments(records: Iterable[TransactionRecord]) -> Iterator[TransactionRecord]:
    return (r for r in records if r.amount == r.delivered_amount)


def filter_stream(
    items: Iterable[TransactionRecord | MalformedRecord],
    report: FilterReport,
    max_logged: int = 10,
) -> Iterator[TransactionRecord]:
    """Apply both filters to parser output, tallying every input into ``report``.

    A record failing both filters is counted once, as non-XRP.
    """
    for item in items:
        report.input_count += 1
        if isinstance(item, MalformedRecord):
            report.malformed_count += 1
            if report.malformed_count <= max_logged:
                log.warning("line %d: %s", item.line_no, item.reason)
            continue
        if item.source_currency != XRP or item.destination_currency != XRP:
            report.dropped_non_xrp += 1
        elif item.amount != item.delivered_amount:
            report.dropped_partial += 1
        else:
            report.kept_count += 1
            yield item
    if report.malformed_count > max_logged:
        log.warning("%d malformed lines in total", report.malformed_count)


# --- serialization ----------------------------------------------------------

def record_fields(r: TransactionRecord) -> list:
    return [
        format_timestamp(r.timestamp),
        r.source,
        r.destination,
        r.source_currency,
        r.destination_currency,
        r.amount,
        r.delivered_amount,
    ]


def write_ledger(records: Iterable[TransactionRecord], out: IO[str], fmt: str = "csv") -> int:
    """Write records in canonical form to a text stream; returns the row count."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    n = 0
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in records:
            writer.writerow(record_fields(r))
            n += 1
    else:
        for r in records:
            out.write(json.dumps(dict(zip(FIELDS, record_fields(r)))) + "\n")
            n += 1
    return n


def read_ledger(path, fmt: str = "csv") -> list[TransactionRecord]:
    """Read a canonical (already filtered) file, refusing malformed lines."""
    with open(path, "rb") as fh:
        out = []
        for item in parse_ledger(fh, fmt):
            if isinstance(item, MalformedRecord):
                raise LedgerFormatError(f"{path}: line {item.line_no}: {item.reason}")
            out.append(item)
        return out


# --- yearly summary ---------------------------------------------------------

@dataclass
class YearRow:
    n_transactions: int = 0
    n_sources: int = 0
    n_destinations: int = 0
    n_nodes: int = 0
    total_drops: int = 0

    @property
    def total_xrp(self) -> float:
        return self.total_drops / DROPS_PER_XRP


@dataclass
class YearlySummary:
    rows: dict[int, YearRow] = field(default_factory=dict)
    total: YearRow = field(default_factory=YearRow)

    def to_csv(self, out: IO[str]) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["year", "n_transactions", "n_sources", "n_destinations", "n_nodes", "total_xrp"])
        items = [(str(y), row) for y, row in sorted(self.rows.items())] + [("all", self.total)]
        for label, row in items:
            writer.writerow([label, row.n_transactions, row.n_sources, row.n_destinations,
                             row.n_nodes, _xrp_text(row.total_drops)])


def _xrp_text(drops: int) -> str:
    whole, frac = divmod(drops, DROPS_PER_XRP)
    return f"{whole}.{frac:06d}"


def yearly_summary(records: Iterable[TransactionRecord]) -> YearlySummary:
    """Per-UTC-year counts of transactions, sources, destinations and nodes.

    ``n_nodes`` is the size of the union of sources and destinations, so an
    account active on both sides is counted once.
    """
    counts: dict[int, list] = {}
    all_src: set[str] = set()
    all_dst: set[str] = set()
    total = YearRow()
    for r in records:
        year = r.timestamp.year
        acc = counts.get(year)
        if acc is None:
            acc = counts[year] = [0, set(), set(), 0]
        acc[0] += 1
        acc[1].add(r.source)
        acc[2].add(r.destination)
        acc[3] += r.amount
        all_src.add(r.source)
        all_dst.add(r.destination)
        total.n_transactions += 1
        total.total_drops += r.amount
    summary = YearlySummary()
    for year, (n, src, dst, drops) in counts.items():
        summary.rows[year] = YearRow(n, len(src), len(dst), len(src | dst), drops)
    total.n_sources = len(all_src)
    total.n_destinations = len(all_dst)
    total.n_nodes = len(all_src | all_dst)
    summary.total = total
    return summary
