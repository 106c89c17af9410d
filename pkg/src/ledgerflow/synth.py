"""Seeded synthetic ledgers with known stylized facts.

Everything here is test scaffolding: Pareto amounts above a floor, a
weekend dip in activity, transaction volume coupled to activity by a
power law, preferential-attachment account choice, plus a few injected
archetype accounts (pair, bridge, even trader).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from .ingest import DROPS_PER_XRP, XRP, TransactionRecord

# Independent random streams split off the master seed, in this fixed order.
STREAMS = ("activity", "amounts", "times", "pairing", "archetypes", "faults")

FOREIGN_PAIRS = (
    ("CCK", "CCK"), ("CNY", "CNY"), ("EUR", "EUR"), ("USD", "USD"),
    ("BTC", "BTC"), ("XRP", "USD"), ("USD", "XRP"), ("JPY", "XRP"),
)

PAIR_AMOUNT_DROPS = 2 * 10**11 * DROPS_PER_XRP
BRIDGE_AMOUNT_DROPS = 11 * 10**9 * DROPS_PER_XRP
EVEN_AMOUNT_DROPS = 10**6 * DROPS_PER_XRP
PAIR_SMALL_IN_DAYS = 17
PAIR_SMALL_OUT_DAYS = 2
EVEN_DAYS = 10


class SynthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Archetypes:
    pair: int = 0
    bridge: int = 0
    even: int = 0


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 2018
    n_days: int = 364
    start: date = date(2018, 1, 1)
    n_accounts: int = 5000
    txns_per_day: float = 275.0
    pareto_alpha: float = 1.0
    amount_xmin_drops: int = 10**4 * DROPS_PER_XRP
    amount_max_drops: int = 10**11 * DROPS_PER_XRP
    weekend_dip: float = 0.3
    herding_exponent: float = 1.5
    herding_sigma: float = 0.2
    activity_sigma: float = 0.1
    activity_growth: float = 0.0  # log-range of a linear activity trend over the span
    archetypes: Archetypes = field(default_factory=Archetypes)
    partial_rate: float = 0.0
    foreign_rate: float = 0.0

    def validate(self) -> None:
        def need(cond: bool, msg: str) -> None:
            if not cond:
                raise SynthConfigError(msg)

        need(isinstance(self.seed, int) and 0 <= self.seed < 2**64, "seed must be a 64-bit non-negative integer")
        need(isinstance(self.n_days, int) and self.n_days >= 1, "n_days must be a positive integer")
        need(isinstance(self.n_accounts, int) and self.n_accounts >= 2, "n_accounts must be at least 2")
        need(self.txns_per_day > 0, "txns_per_day must be positive")
        need(self.pareto_alpha > 0, "pareto_alpha must be positive")
        need(isinstance(self.amount_xmin_drops, int) and self.amount_xmin_drops >= 1,
             "amount_xmin_drops must be a positive integer")
        need(isinstance(self.amount_max_drops, int) and self.amount_max_drops >= self.amount_xmin_drops,
             "amount_max_drops must be an integer >= amount_xmin_drops")
        need(self.amount_max_drops < 2**62, "amount_max_drops too large for 64-bit drops")
        need(0 <= self.weekend_dip < 1, "weekend_dip must be in [0, 1)")
        need(self.herding_sigma >= 0 and self.activity_sigma >= 0, "noise sigmas must be non-negative")
        need(0 <= self.partial_rate <= 1 and 0 <= self.foreign_rate <= 1, "fault rates must be in [0, 1]")
        a = self.archetypes
        need(all(isinstance(v, int) and v >= 0 for v in (a.pair, a.bridge, a.even)),
             "archetype counts must be non-negative integers")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> SynthConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise SynthConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(doc)
        try:
            if "start" in kw and not isinstance(kw["start"], date):
                kw["start"] = date.fromisoformat(kw["start"])
            if "archetypes" in kw and not isinstance(kw["archetypes"], Archetypes):
                kw["archetypes"] = Archetypes(**kw["archetypes"])
        except (TypeError, ValueError) as exc:
            raise SynthConfigError(str(exc)) from exc
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["start"] = self.start.isoformat()
        return d


def _streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


class DailyActivity(NamedTuple):
    dates: list[date]
    activity: np.ndarray  # relative number of active users
    volume: np.ndarray  # relative transaction volume, ~ activity**herding_exponent
    n_txn: np.ndarray


def gen_daily_activity(config: SynthConfig, rng: np.random.Generator | None = None) -> DailyActivity:
    config.validate()
    if rng is None:
        rng = _streams(config.seed)["activity"]
    n = config.n_days
    t = np.arange(n)
    dates = [config.start + timedelta(days=int(i)) for i in t]
    weekend = np.array([d.weekday() >= 5 for d in dates])
    dip = np.where(weekend, 1.0 - config.weekend_dip, 1.0)
    trend = config.activity_growth * t / max(n - 1, 1)
    activity = dip * np.exp(trend + config.activity_sigma * rng.standard_normal(n))
    volume = activity**config.herding_exponent * np.exp(config.herding_sigma * rng.standard_normal(n))
    n_txn = np.rint(config.txns_per_day * volume / volume.mean()).astype(np.int64)
    return DailyActivity(dates, activity, volume, n_txn)


def pareto_amounts(n: int, alpha: float, xmin_drops: int, max_drops: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-transform Pareto draws in integer drops, floored and capped."""
    u = 1.0 - rng.random(n)  # (0, 1]
    x = xmin_drops * u ** (-1.0 / alpha)
    return np.floor(np.minimum(x, max_drops)).astype(np.int64)


def preferential_endpoints(n_endpoints: int, p_new: float, rng: np.random.Generator) -> np.ndarray:
    """Account index per endpoint slot from a Yule-Simon process.

    Slot i opens a fresh account with probability ``p_new``; otherwise it
    copies the account of a uniformly chosen earlier slot, which picks
    accounts in proportion to their prior activity.
    """
    if n_endpoints == 0:
        return np.zeros(0, dtype=np.int64)
    is_new = rng.random(n_endpoints) < p_new
    is_new[0] = True
    idx = np.arange(n_endpoints)
    parent = np.floor(rng.random(n_endpoints) * idx).astype(np.int64)
    parent[is_new] = idx[is_new]
    # pointer jumping resolves every slot to the slot that opened its account
    while True:
        nxt = parent[parent]
        if np.array_equal(nxt, parent):
            break
        parent = nxt
    account_of_root = np.cumsum(is_new) - 1
    return account_of_root[parent]


def _ts(day: date, seconds: int) -> datetime:
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc) + timedelta(seconds=int(seconds))


def _xrp(ts: datetime, src: str, dst: str, drops: int) -> TransactionRecord:
    return TransactionRecord(ts, src, dst, XRP, XRP, int(drops), int(drops))


ARCHETYPE_KINDS = ("pair_sender", "pair_receiver", "bridge", "even_trader")


def gen_archetype_account(
    kind: str,
    account: str,
    *,
    day: date,
    amount_drops: int,
    counterparty: str,
    out_counterparty: str | None = None,
    gap_days: int = 3,
    small_in_days: Sequence[date] = (),
    small_in_drops: int = DROPS_PER_XRP,
    small_out_days: Sequence[date] = (),
    small_out_drops: int = 10 * DROPS_PER_XRP,
    small_counterparties: Sequence[str] = ("noise",),
    trade_days: Sequence[date] = (),
    at: time = time(7, 50, 20),
) -> list[TransactionRecord]:
    """Transactions of one archetype account.

    pair_sender / pair_receiver: ``amount_drops`` moves from sender to
    receiver as two transfers 50 s apart on ``day``; the receiver also gets
    ``small_in_drops`` on each of ``small_in_days`` and pays
    ``small_out_drops`` on each of ``small_out_days``.
    bridge: ``amount_drops`` in from ``counterparty`` on ``day`` and out to
    ``out_counterparty`` ``gap_days`` later.
    even_trader: equal transfers both ways with ``counterparty`` on every
    date in ``trade_days``.
    """
    start = at.hour * 3600 + at.minute * 60 + at.second
    if kind in ("pair_sender", "pair_receiver"):
        if start + 50 >= 86400:
            raise ValueError("pair transfers must fall on one UTC day")
        first = amount_drops // 2
        sender, receiver = (account, counterparty) if kind == "pair_sender" else (counterparty, account)
        out = [
            _xrp(_ts(day, start), sender, receiver, first),
            _xrp(_ts(day, start + 50), sender, receiver, amount_drops - first),
        ]
        if kind == "pair_receiver":
            cps = list(small_counterparties)
            for i, d in enumerate(small_in_days):
                out.append(_xrp(_ts(d, 12 * 3600 + i), cps[i % len(cps)], account, small_in_drops))
            for i, d in enumerate(small_out_days):
                out.append(_xrp(_ts(d, 15 * 3600 + i), account, cps[(i + 1) % len(cps)], small_out_drops))
        return sorted(out, key=lambda r: r.timestamp)
    if kind == "bridge":
        if out_counterparty is None:
            raise ValueError("bridge needs an out_counterparty")
        return [
            _xrp(_ts(day, start), counterparty, account, amount_drops),
            _xrp(_ts(day + timedelta(days=gap_days), start), account, out_counterparty, amount_drops),
        ]
    if kind == "even_trader":
        out = []
        for d in trade_days:
            out.append(_xrp(_ts(d, start), account, counterparty, amount_drops))
            out.append(_xrp(_ts(d, start + 3600), counterparty, account, amount_drops))
        return out
    raise ValueError(f"unknown archetype kind {kind!r}; expected one of {ARCHETYPE_KINDS}")


def account_id(i: int) -> str:
    return f"r{i:07d}"


class LedgerColumns(NamedTuple):
    """Background ledger in columnar form (before archetypes and faults)."""

    seconds: np.ndarray  # offset from config.start midnight UTC
    source: np.ndarray
    destination: np.ndarray
    amount: np.ndarray


def gen_background(config: SynthConfig, streams: dict[str, np.random.Generator] | None = None) -> LedgerColumns:
    config.validate()
    if streams is None:
        streams = _streams(config.seed)
    act = gen_daily_activity(config, streams["activity"])
    n = int(act.n_txn.sum())
    amounts = pareto_amounts(
        n, config.pareto_alpha, config.amount_xmin_drops, config.amount_max_drops, streams["amounts"]
    )
    day_idx = np.repeat(np.arange(config.n_days, dtype=np.int64), act.n_txn)
    seconds = np.sort(day_idx * 86400 + streams["times"].integers(0, 86400, n))
    p_new = min(1.0, config.n_accounts / max(2 * n, 1))
    ends = preferential_endpoints(2 * n, p_new, streams["pairing"])
    src, dst = ends[0::2].copy(), ends[1::2].copy()
    clash = np.flatnonzero(src == dst)
    if clash.size:
        fresh = (ends.max() + 1) if ends.size else 0
        dst[clash] = fresh + np.arange(clash.size)
    return LedgerColumns(seconds, src, dst, amounts)


def gen_ledger(config: SynthConfig) -> list[TransactionRecord]:
    """Deterministic synthetic ledger sorted by timestamp."""
    config.validate()
    streams = _streams(config.seed)
    cols = gen_background(config, streams)
    base = datetime(config.start.year, config.start.month, config.start.day, tzinfo=timezone.utc)
    n_acc = int(max(cols.source.max(initial=-1), cols.destination.max(initial=-1))) + 1
    ids = [account_id(i) for i in range(n_acc)]
    records = [
        _xrp(base + timedelta(seconds=s), ids[a], ids[b], amt)
        for s, a, b, amt in zip(cols.seconds.tolist(), cols.source.tolist(),
                                cols.destination.tolist(), cols.amount.tolist())
    ]
    extra = _archetype_records(config, streams["archetypes"], ids)
    if extra:
        records = sorted(records + extra, key=lambda r: r.timestamp)
    if config.partial_rate or config.foreign_rate:
        records = _inject_faults(records, config, streams["faults"])
    return records


def _archetype_records(config: SynthConfig, rng: np.random.Generator, ids: list[str]) -> list[TransactionRecord]:
    arch = config.archetypes
    n_days = config.n_days
    days = [config.start + timedelta(days=i) for i in range(n_days)]
    noise = ids[: min(len(ids), 50)] or ["noise"]
    out: list[TransactionRecord] = []
    for k in range(arch.pair):
        d = int(rng.integers(n_days))
        others = [i for i in range(n_days) if i != d]
        rng.shuffle(others)
        n_in = min(PAIR_SMALL_IN_DAYS, len(others))
        small_in = sorted(others[:n_in])
        small_out = sorted(others[n_in:n_in + PAIR_SMALL_OUT_DAYS])
        out += gen_archetype_account(
            "pair_receiver", f"pairR{k:03d}", day=days[d], amount_drops=PAIR_AMOUNT_DROPS,
            counterparty=f"pairS{k:03d}",
            small_in_days=[days[i] for i in small_in],
            small_out_days=[days[i] for i in small_out],
            small_counterparties=noise,
        )
    for k in range(arch.bridge):
        gap = min(int(rng.integers(1, 6)), n_days - 1)
        d = int(rng.integers(n_days - gap))
        out += gen_archetype_account(
            "bridge", f"bridge{k:03d}", day=days[d], amount_drops=BRIDGE_AMOUNT_DROPS,
            counterparty=f"bridgeI{k:03d}", out_counterparty=f"bridgeO{k:03d}", gap_days=gap,
        )
    for k in range(arch.even):
        picks = sorted(rng.choice(n_days, size=min(EVEN_DAYS, n_days), replace=False).tolist())
        out += gen_archetype_account(
            "even_trader", f"even{k:03d}A", day=days[picks[0]], amount_drops=EVEN_AMOUNT_DROPS,
            counterparty=f"even{k:03d}B", trade_days=[days[i] for i in picks],
        )
    return out


def _inject_faults(records: list[TransactionRecord], config: SynthConfig, rng: np.random.Generator) -> list[TransactionRecord]:
    # Faulty copies go right after their original so clean filtering gives back the input.
    n = len(records)
    partial = rng.random(n) < config.partial_rate
    foreign = rng.random(n) < config.foreign_rate
    which = rng.integers(len(FOREIGN_PAIRS), size=n)
    cut = rng.random(n)
    out = []
    for i, r in enumerate(records):
        out.append(r)
        if partial[i] and r.amount > 0:
            delivered = int(r.amount * (1.0 - max(cut[i], 1e-6)))
            out.append(r._replace(delivered_amount=min(delivered, r.amount - 1)))
        if foreign[i]:
            scur, dcur = FOREIGN_PAIRS[which[i]]
            out.append(r._replace(source_currency=scur, destination_currency=dcur))
    return out


def pa_network_records(
    n_nodes: int, seed: int, m: int = 5, offset: float = 1.0, start: date = date(2018, 1, 1)
) -> list[TransactionRecord]:
    """Directed growth network with a linear attachment kernel (Price's model).

    Each new account pays ``m`` distinct earlier accounts, each chosen with
    probability proportional to its in-degree plus ``offset``. The in-degree
    CCDF then has tail exponent ``1 + offset / m``.
    """
    if n_nodes <= m:
        raise ValueError("n_nodes must exceed m")
    rng = np.random.default_rng(seed)
    targets: list[int] = []  # one entry per received edge
    edges: list[tuple[int, int]] = []
    for new in range(m, n_nodes):
        chosen: set[int] = set()
        while len(chosen) < m:
            # uniform pick with weight offset * new, else proportional to in-degree
            if rng.random() * (offset * new + len(targets)) < offset * new:
                chosen.add(int(rng.integers(new)))
            else:
                chosen.add(targets[int(rng.integers(len(targets)))])
        for t in sorted(chosen):
            edges.append((new, t))
            targets.append(t)
    base = datetime(start.year, start.month, start.day, tzinfo=timezone.utc)
    return [
        _xrp(base + timedelta(seconds=i), account_id(a), account_id(b), DROPS_PER_XRP)
        for i, (a, b) in enumerate(edges)
    ]
