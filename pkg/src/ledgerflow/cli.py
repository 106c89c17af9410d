"""``ledgerflow`` command line: ingest, analyze, flowindex, network, synth.

Exit codes: 0 success, 2 I/O or input-format failure, 3 analysis domain
error, 4 invalid configuration or flags.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .concentration import DEFAULT_ORDER, ConcentrationError
from .flows import DEFAULT_CUTOFF, flow_table, read_flow_table, write_flow_table
from .ingest import (
    DROPS_PER_XRP,
    FORMATS,
    FilterReport,
    LedgerFormatError,
    filter_stream,
    parse_ledger,
    read_ledger,
    write_ledger,
    yearly_summary,
)
from .network import NetworkError, export_graph, induced_network, select_big_nodes, walnut_decomposition
from .stats import (
    DAILY_COLUMNS,
    DEFAULT_XMIN_XRP,
    WEEKLY_THRESHOLD,
    StatsError,
    daily_aggregate,
    dft_spectrum,
    empirical_ccdf,
    herding_fit,
    pareto_index,
    weekly_peak_score,
)
from .synth import SynthConfig, SynthConfigError, gen_ledger

log = logging.getLogger("ledgerflow")

EXIT_OK, EXIT_IO, EXIT_DOMAIN, EXIT_CONFIG = 0, 2, 3, 4
OUT_DIR_ENV = "LEDGERFLOW_OUT_DIR"
DEFAULT_THRESHOLDS_XRP = ("1e7", "1e8", "1e9")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _xrp_to_drops(text: str) -> int:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise UsageError(f"not a number: {text!r}") from None
    if not value.is_finite() or value <= 0:
        raise UsageError(f"XRP amount must be positive, got {text}")
    drops = value * DROPS_PER_XRP
    if drops != drops.to_integral_value():
        raise UsageError(f"{text} XRP is not a whole number of drops")
    return int(drops)


def _drops_text(drops: int) -> str:
    whole, frac = divmod(drops, DROPS_PER_XRP)
    return str(whole) if frac == 0 else f"{whole}.{frac:06d}".rstrip("0")


@dataclass
class RunManifest:
    command: str
    parameters: dict[str, Any]
    inputs: list[dict[str, str]] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    duration_s: float = 0.0

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.command}.manifest.json"
        doc = {
            "command": self.command,
            "parameters": self.parameters,
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
            "version": self.version,
            "duration_s": self.duration_s,
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


class _Run:
    """Tracks inputs/outputs of one command and writes its manifest."""

    def __init__(self, command: str, out_dir: Path, params: dict[str, Any]):
        self.out_dir = out_dir
        self.manifest = RunManifest(command, params)
        self.t0 = time.perf_counter()

    def add_input(self, path: Path) -> None:
        self.manifest.inputs.append({"name": path.name, "sha256": _sha256(path)})

    def path(self, name: str) -> Path:
        self.manifest.outputs.append(name)
        return self.out_dir / name

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text, encoding="utf-8")

    def finish(self) -> None:
        self.manifest.duration_s = round(time.perf_counter() - self.t0, 6)
        self.manifest.write(self.out_dir)


def _load_filtered(run: _Run, args) -> list:
    path = Path(args.input)
    run.add_input(path)
    return read_ledger(path, args.format)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- commands ---------------------------------------------------------------

def cmd_ingest(args, run: _Run) -> int:
    report = FilterReport()
    paths = [Path(p) for p in args.input]
    for p in paths:
        if not p.is_file():
            raise FileNotFoundError(f"no such input file: {p}")
    kept = []
    for p in paths:
        run.add_input(p)
        with open(p, "rb") as fh:
            kept.extend(filter_stream(parse_ledger(fh, args.format), report))
    ext = "csv" if args.format == "csv" else "jsonl"
    with open(run.path(f"filtered.{ext}"), "w", encoding="utf-8", newline="") as out:
        write_ledger(kept, out, args.format)
    summary = yearly_summary(kept)
    with open(run.path("yearly_summary.csv"), "w", encoding="utf-8", newline="") as out:
        summary.to_csv(out)
    run.write_text("filter_report.json", report.to_json())
    return EXIT_OK


def _year_filter(records, year):
    return records if year is None else [r for r in records if r.timestamp.year == year]


def cmd_analyze(args, run: _Run) -> int:
    records = _year_filter(_load_filtered(run, args), args.year)
    which = args.which
    if which in ("ccdf", "pareto"):
        amounts = [r.amount for r in records]
        if which == "ccdf":
            curve = empirical_ccdf(amounts)
            rows = [(_drops_text(int(v)), repr(f)) for v, f in zip(curve.values.tolist(), curve.fractions.tolist())]
            run.write_text("ccdf.csv", _csv_text(["amount_xrp", "fraction_at_or_above"], rows))
            side = {"n": len(amounts), "n_distinct": len(curve), "year": args.year,
                    "min_xrp": _drops_text(int(curve.values[0])), "max_xrp": _drops_text(int(curve.values[-1]))}
            run.write_text("ccdf.json", _json_text(side))
            return EXIT_OK
        xmin = args.xmin_drops
        hill = pareto_index(amounts, xmin, "hill")
        ols = pareto_index(amounts, xmin, "loglog-ols")
        tail = empirical_ccdf([a for a in amounts if a > xmin])
        rows = [(_drops_text(int(v)), repr(f)) for v, f in zip(tail.values.tolist(), tail.fractions.tolist())]
        run.write_text("pareto.csv", _csv_text(["amount_xrp", "tail_fraction_at_or_above"], rows))
        side = {
            "xmin_xrp": _drops_text(xmin),
            "year": args.year,
            "alpha": hill.alpha,
            "hill": {"alpha": hill.alpha, "stderr": hill.stderr, "n_tail": hill.n_tail},
            "loglog_ols": {"alpha": ols.alpha, "stderr": ols.stderr, "n_tail": ols.n_tail},
        }
        run.write_text("pareto.json", _json_text(side))
        return EXIT_OK

    series = daily_aggregate(records)
    if len(series) == 0:
        raise StatsError("no transactions: daily series is empty")
    if which == "daily":
        rows = [(d.isoformat(), *(getattr(s, c) for c in DAILY_COLUMNS)) for d, s in series.days.items()]
        run.write_text("daily.csv", _csv_text(["date", *DAILY_COLUMNS], rows))
        side = {"first": series.dates[0].isoformat(), "last": series.dates[-1].isoformat(),
                "n_days": len(series), "n_transactions": sum(s.txn_count for s in series.days.values())}
        run.write_text("daily.json", _json_text(side))
        return EXIT_OK
    if which == "dft":
        values = [float(v) for v in series.column(args.series)]
        spec = dft_spectrum(values)
        rows = [(repr(p), repr(m)) for p, m in zip(spec.periods.tolist(), spec.magnitudes.tolist())]
        run.write_text("dft.csv", _csv_text(["period_days", "magnitude"], rows))
        score = weekly_peak_score(values)
        peak = float(spec.periods[int(spec.magnitudes.argmax())])
        side = {"series": args.series, "n_days": spec.length, "peak_period_days": peak,
                "weekly_score": score, "weekly_detected": score > WEEKLY_THRESHOLD}
        run.write_text("dft.json", _json_text(side))
        return EXIT_OK
    if which == "herding":
        fit = herding_fit(series)
        rows = [(d.isoformat(), s.n_users, _drops_text(s.total_drops)) for d, s in series.days.items()]
        run.write_text("herding.csv", _csv_text(["date", "n_users", "total_xrp"], rows))
        side = {"exponent": fit.exponent, "intercept": fit.intercept, "stderr": fit.stderr,
                "per_user_exponent": fit.exponent - 1.0}
        run.write_text("herding.json", _json_text(side))
        return EXIT_OK
    raise UsageError(f"unknown analysis {which!r}")


def cmd_flowindex(args, run: _Run) -> int:
    records = _load_filtered(run, args)
    rows = flow_table(records, args.order_n, args.cutoff)
    with open(run.path("flow_index.csv"), "w", encoding="utf-8", newline="") as out:
        write_flow_table(rows, out)
    return EXIT_OK


def cmd_network(args, run: _Run) -> int:
    records = _load_filtered(run, args)
    if args.flow_table:
        ft_path = Path(args.flow_table)
        run.add_input(ft_path)
        with open(ft_path, encoding="utf-8", newline="") as fh:
            table = read_flow_table(fh)
    else:
        table = flow_table(records, args.order_n, args.cutoff)
    summary_rows, cross_rows = [], []
    for text in args.threshold_xrp:
        drops = _xrp_to_drops(text)
        label = _drops_text(drops)
        net = induced_network(records, select_big_nodes(records, drops), drops)
        part = walnut_decomposition(net, table, args.cutoff)
        for fmt in args.formats:
            (run.path(f"network_{label}xrp.{fmt}")).write_bytes(export_graph(net, part, fmt))
        counts = part.counts()
        summary_rows.append((label, len(net.nodes), len(net.edges), net.n_transactions,
                             counts["in"], counts["out"], counts["body"], counts["dormant"]))
        for (a, b), c in sorted(part.cross.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
            cross_rows.append((label, a.value, b.value, c.edge_count, c.txn_count, c.total_drops))
    run.write_text("partition_summary.csv", _csv_text(
        ["threshold_xrp", "n_nodes", "n_edges", "n_transactions", "in", "out", "body", "dormant"], summary_rows))
    run.write_text("partition_edges.csv", _csv_text(
        ["threshold_xrp", "src_class", "dst_class", "edge_count", "txn_count", "total_drops"], cross_rows))
    return EXIT_OK


SYNTH_FLAGS = {
    "seed": int, "n_days": int, "n_accounts": int, "txns_per_day": float,
    "pareto_alpha": float, "weekend_dip": float, "herding_exponent": float,
    "herding_sigma": float, "activity_sigma": float, "activity_growth": float,
    "partial_rate": float, "foreign_rate": float, "start": str,
}


def _synth_config(args) -> SynthConfig:
    doc: dict[str, Any] = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SynthConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SynthConfigError("config must be a JSON object")
    for key in SYNTH_FLAGS:
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    if args.xmin_xrp is not None:
        doc["amount_xmin_drops"] = _xrp_to_drops(args.xmin_xrp)
    arch = dict(doc.get("archetypes") or {})
    for kind in ("pair", "bridge", "even"):
        value = getattr(args, kind)
        if value is not None:
            arch[kind] = value
    if arch:
        doc["archetypes"] = arch
    try:
        return SynthConfig.from_dict(doc)
    except TypeError as exc:
        raise SynthConfigError(str(exc)) from exc


def cmd_synth(args, run: _Run) -> int:
    if args.config:
        run.add_input(Path(args.config))
    config = _synth_config(args)
    run.manifest.parameters["config"] = config.to_dict()
    records = gen_ledger(config)
    ext = "csv" if args.format == "csv" else "jsonl"
    with open(run.path(f"ledger.{ext}"), "w", encoding="utf-8", newline="") as out:
        write_ledger(records, out, args.format)
    run.write_text("synth_config.json", _json_text(config.to_dict()))
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ledgerflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, multi_input=False):
        if multi_input:
            p.add_argument("--input", nargs="+", required=True)
        else:
            p.add_argument("--input", required=True)
        p.add_argument("--format", choices=FORMATS, default="csv")
        p.add_argument("--out-dir", default=None)

    p = sub.add_parser("ingest", help="parse and filter raw ledger files")
    common(p, multi_input=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="distribution and time-series statistics")
    common(p)
    p.add_argument("--which", choices=("ccdf", "pareto", "daily", "dft", "herding"), required=True)
    p.add_argument("--xmin-xrp", default=str(DEFAULT_XMIN_XRP))
    p.add_argument("--year", type=int, default=None)
    p.add_argument("--series", choices=DAILY_COLUMNS, default="txn_count")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("flowindex", help="Flow Index table for every account")
    common(p)
    p.add_argument("--order-n", type=int, default=DEFAULT_ORDER)
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    p.set_defaults(func=cmd_flowindex)

    p = sub.add_parser("network", help="threshold networks and walnut decomposition")
    common(p)
    p.add_argument("--threshold-xrp", nargs="+", default=list(DEFAULT_THRESHOLDS_XRP))
    p.add_argument("--flow-table", default=None)
    p.add_argument("--order-n", type=int, default=DEFAULT_ORDER)
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    p.add_argument("--formats", nargs="+", choices=("dot", "json"), default=["dot", "json"])
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("synth", help="generate a synthetic ledger")
    p.add_argument("--config", default=None, help="JSON config document; flags override it")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--out-dir", default=None)
    for key, typ in SYNTH_FLAGS.items():
        p.add_argument("--" + key.replace("_", "-"), type=typ, default=None)
    p.add_argument("--xmin-xrp", default=None)
    p.add_argument("--pair", type=int, default=None)
    p.add_argument("--bridge", type=int, default=None)
    p.add_argument("--even", type=int, default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def _params(args) -> dict[str, Any]:
    skip = {"func", "verbose", "out_dir", "xmin_drops"}
    params = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        # file arguments are identified by name; their digests go in "inputs"
        if k in ("input", "config", "flow_table") and v is not None:
            v = [Path(x).name for x in v] if isinstance(v, list) else Path(v).name
        params[k] = v
    return params


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        if getattr(args, "order_n", DEFAULT_ORDER) < 2:
            raise UsageError("--order-n must be at least 2")
        if getattr(args, "cutoff", DEFAULT_CUTOFF) <= 0:
            raise UsageError("--cutoff must be positive")
        if getattr(args, "xmin_xrp", None) is not None and args.command == "analyze":
            args.xmin_drops = _xrp_to_drops(args.xmin_xrp)
        if args.command == "network":
            for t in args.threshold_xrp:
                _xrp_to_drops(t)
    except UsageError as exc:
        print(f"ledgerflow: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or ".")
    func: Callable = args.func
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        run = _Run(args.command, out_dir, _params(args))
        code = func(args, run)
        run.finish()
        return code
    except (SynthConfigError, UsageError) as exc:
        print(f"ledgerflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StatsError, ConcentrationError, NetworkError) as exc:
        print(f"ledgerflow: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, LedgerFormatError, UnicodeDecodeError) as exc:
        print(f"ledgerflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
