"""Daily in/out flow series per account, the Flow Index and node classes."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Mapping, NamedTuple

from .concentration import DEFAULT_ORDER, effective_count
from .ingest import TransactionRecord

DEFAULT_CUTOFF = 0.5

TABLE_FIELDS = ("account", "a_in", "a_out", "class", "max_in_drops", "max_out_drops", "n_days_in", "n_days_out")


@dataclass
class DailyFlowPair:
    """Daily inflow and outflow totals in drops; zero-flow days are absent."""

    inflow: dict[date, int] = field(default_factory=dict)
    outflow: dict[date, int] = field(default_factory=dict)

    def add_in(self, day: date, drops: int) -> None:
        if drops > 0:
            self.inflow[day] = self.inflow.get(day, 0) + drops

    def add_out(self, day: date, drops: int) -> None:
        if drops > 0:
            self.outflow[day] = self.outflow.get(day, 0) + drops

    @property
    def max_in(self) -> int:
        return max(self.inflow.values(), default=0)

    @property
    def max_out(self) -> int:
        return max(self.outflow.values(), default=0)


class FlowIndex(NamedTuple):
    a_in: float
    a_out: float


class NodeClass(str, enum.Enum):
    IN = "in"  # source side: outflow dominant
    OUT = "out"  # sink side: inflow dominant
    BODY = "body"
    DORMANT = "dormant"


def build_daily_flows(records: Iterable[TransactionRecord], account: str) -> DailyFlowPair:
    """Sum the account's received and sent drops per UTC date.

    A self-loop counts on both sides.
    """
    flows = DailyFlowPair()
    for r in records:
        if r.destination == account:
            flows.add_in(r.timestamp.date(), r.amount)
        if r.source == account:
            flows.add_out(r.timestamp.date(), r.amount)
    return flows


def build_all_daily_flows(records: Iterable[TransactionRecord]) -> dict[str, DailyFlowPair]:
    """Single pass over the records producing every account's flows."""
    table: dict[str, DailyFlowPair] = {}
    for r in records:
        day = r.timestamp.date()
        if r.amount <= 0:
            # zero-amount records still make the accounts known
            table.setdefault(r.source, DailyFlowPair())
            table.setdefault(r.destination, DailyFlowPair())
            continue
        dst = table.get(r.destination)
        if dst is None:
            dst = table[r.destination] = DailyFlowPair()
        dst.inflow[day] = dst.inflow.get(day, 0) + r.amount
        src = table.get(r.source)
        if src is None:
            src = table[r.source] = DailyFlowPair()
        src.outflow[day] = src.outflow.get(day, 0) + r.amount
    return table


def flow_index(flows: DailyFlowPair, n: int = DEFAULT_ORDER) -> FlowIndex:
    """Effective number of significant inflow and outflow days.

    Each side's modified inverse HH index is discounted by that side's
    largest daily flow over the largest daily flow of either side. An
    empty side contributes 0.
    """
    max_in, max_out = flows.max_in, flows.max_out
    joint = max(max_in, max_out)
    if joint == 0:
        return FlowIndex(0.0, 0.0)
    a_in = effective_count(list(flows.inflow.values()), n) * (max_in / joint) if max_in else 0.0
    a_out = effective_count(list(flows.outflow.values()), n) * (max_out / joint) if max_out else 0.0
    return FlowIndex(a_in, a_out)


def classify_node(index: FlowIndex, cutoff: float = DEFAULT_CUTOFF) -> NodeClass:
    """Place a node by comparing each Flow Index component with ``cutoff``.

    Low outflow with real inflow is a sink (OUT); the mirror case is a
    source (IN).
    """
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    low_in = index.a_in <= cutoff
    low_out = index.a_out <= cutoff
    if low_out and not low_in:
        return NodeClass.OUT
    if low_in and not low_out:
        return NodeClass.IN
    if low_in and low_out:
        return NodeClass.DORMANT
    return NodeClass.BODY


@dataclass(frozen=True)
class FlowRow:
    account: str
    index: FlowIndex
    node_class: NodeClass
    max_in_drops: int
    max_out_drops: int
    n_days_in: int
    n_days_out: int


def flow_table(
    records: Iterable[TransactionRecord],
    n: int = DEFAULT_ORDER,
    cutoff: float = DEFAULT_CUTOFF,
) -> dict[str, FlowRow]:
    """Flow Index and class of every account seen in ``records``, keyed by account."""
    rows = {}
    for account, flows in sorted(build_all_daily_flows(records).items()):
        idx = flow_index(flows, n)
        rows[account] = FlowRow(
            account, idx, classify_node(idx, cutoff),
            flows.max_in, flows.max_out, len(flows.inflow), len(flows.outflow),
        )
    return rows


def write_flow_table(rows: Mapping[str, FlowRow], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TABLE_FIELDS)
    for account in sorted(rows):
        row = rows[account]
        writer.writerow([
            account, repr(row.index.a_in), repr(row.index.a_out), row.node_class.value,
            row.max_in_drops, row.max_out_drops, row.n_days_in, row.n_days_out,
        ])


def read_flow_table(fh: IO[str]) -> dict[str, FlowRow]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != TABLE_FIELDS:
        raise ValueError(f"unexpected flow table header {reader.fieldnames!r}")
    rows = {}
    for rec in reader:
        rows[rec["account"]] = FlowRow(
            rec["account"],
            FlowIndex(float(rec["a_in"]), float(rec["a_out"])),
            NodeClass(rec["class"]),
            int(rec["max_in_drops"]),
            int(rec["max_out_drops"]),
            int(rec["n_days_in"]),
            int(rec["n_days_out"]),
        )
    return rows
