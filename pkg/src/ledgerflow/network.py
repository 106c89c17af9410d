"""Threshold-selected transaction networks and their walnut decomposition."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .flows import DEFAULT_CUTOFF, FlowIndex, FlowRow, NodeClass, classify_node
from .ingest import TransactionRecord
from .stats import CcdfCurve, empirical_ccdf


class NetworkError(ValueError):
    pass


@dataclass
class EdgeStats:
    total_drops: int = 0
    txn_count: int = 0


@dataclass
class ThresholdNetwork:
    nodes: frozenset[str] = frozenset()
    edges: dict[tuple[str, str], EdgeStats] = field(default_factory=dict)
    threshold_drops: int | None = None

    @property
    def n_transactions(self) -> int:
        return sum(e.txn_count for e in self.edges.values())

    @property
    def total_drops(self) -> int:
        return sum(e.total_drops for e in self.edges.values())


def select_big_nodes(records: Iterable[TransactionRecord], threshold_drops: int) -> set[str]:
    """Accounts on either end of at least one transaction of ``threshold_drops`` or more."""
    out: set[str] = set()
    for r in records:
        if r.amount >= threshold_drops:
            out.add(r.source)
            out.add(r.destination)
    return out


def induced_network(
    records: Iterable[TransactionRecord],
    node_set: Iterable[str],
    threshold_drops: int | None = None,
) -> ThresholdNetwork:
    """All transactions with both ends in ``node_set``, merged per ordered pair.

    Every amount counts, not only those above the selection threshold.
    """
    nodes = frozenset(node_set)
    edges: dict[tuple[str, str], EdgeStats] = {}
    if nodes:
        for r in records:
            if r.source in nodes and r.destination in nodes:
                key = (r.source, r.destination)
                e = edges.get(key)
                if e is None:
                    e = edges[key] = EdgeStats()
                e.total_drops += r.amount
                e.txn_count += 1
    return ThresholdNetwork(nodes, edges, threshold_drops)


def threshold_network(records: Iterable[TransactionRecord], threshold_drops: int) -> ThresholdNetwork:
    records = list(records) if not isinstance(records, list) else records
    return induced_network(records, select_big_nodes(records, threshold_drops), threshold_drops)


def degrees(network: ThresholdNetwork, direction: str) -> dict[str, int]:
    """Distinct-counterparty degree per node. A loop counts once each way."""
    if direction not in ("in", "out"):
        raise NetworkError(f"direction must be 'in' or 'out', got {direction!r}")
    deg = Counter({n: 0 for n in network.nodes})
    for src, dst in network.edges:
        deg[dst if direction == "in" else src] += 1
    return dict(deg)


def degree_ccdf(network: ThresholdNetwork, direction: str) -> CcdfCurve:
    if not network.nodes:
        raise NetworkError("degree CCDF of an empty network")
    deg = np.array(list(degrees(network, direction).values()))
    n_zero = int(np.sum(deg == 0))
    positive = deg[deg > 0]
    if positive.size == 0:
        return CcdfCurve(np.zeros(0, dtype=deg.dtype), np.zeros(0), n_zero)
    curve = empirical_ccdf(positive)
    curve.n_zero = n_zero
    return curve


# --- walnut decomposition ---------------------------------------------------

@dataclass
class CrossEdges:
    edge_count: int = 0
    txn_count: int = 0
    total_drops: int = 0


@dataclass
class WalnutPartition:
    in_set: frozenset[str]
    out_set: frozenset[str]
    body_set: frozenset[str]
    dormant_set: frozenset[str]
    classes: dict[str, NodeClass]
    indices: dict[str, FlowIndex]
    cross: dict[tuple[NodeClass, NodeClass], CrossEdges]

    def counts(self) -> dict[str, int]:
        return {
            NodeClass.IN.value: len(self.in_set),
            NodeClass.OUT.value: len(self.out_set),
            NodeClass.BODY.value: len(self.body_set),
            NodeClass.DORMANT.value: len(self.dormant_set),
        }


def _index_of(entry) -> FlowIndex:
    return entry.index if isinstance(entry, FlowRow) else FlowIndex(*entry)


def walnut_decomposition(
    network: ThresholdNetwork,
    flow_indices: Mapping[str, FlowRow | FlowIndex],
    cutoff: float = DEFAULT_CUTOFF,
) -> WalnutPartition:
    """Split the network's nodes into IN / OUT / BODY / DORMANT by Flow Index.

    ``flow_indices`` should come from each account's full history, not from
    the induced subgraph.
    """
    classes: dict[str, NodeClass] = {}
    indices: dict[str, FlowIndex] = {}
    for node in sorted(network.nodes):
        if node not in flow_indices:
            raise NetworkError(f"node {node!r} missing from the flow-index table")
        idx = _index_of(flow_indices[node])
        indices[node] = idx
        classes[node] = classify_node(idx, cutoff)
    groups: dict[NodeClass, set[str]] = {c: set() for c in NodeClass}
    for node, cls in classes.items():
        groups[cls].add(node)
    cross: dict[tuple[NodeClass, NodeClass], CrossEdges] = {}
    for (src, dst), e in sorted(network.edges.items()):
        key = (classes[src], classes[dst])
        c = cross.get(key)
        if c is None:
            c = cross[key] = CrossEdges()
        c.edge_count += 1
        c.txn_count += e.txn_count
        c.total_drops += e.total_drops
    return WalnutPartition(
        frozenset(groups[NodeClass.IN]),
        frozenset(groups[NodeClass.OUT]),
        frozenset(groups[NodeClass.BODY]),
        frozenset(groups[NodeClass.DORMANT]),
        classes,
        indices,
        cross,
    )


# --- export -----------------------------------------------------------------

FILL_COLORS = {
    NodeClass.IN: "#9467bd",
    NodeClass.OUT: "#d62728",
    NodeClass.BODY: "#2ca02c",
    NodeClass.DORMANT: "#c7c7c7",
}


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _export_dot(network: ThresholdNetwork, partition: WalnutPartition | None) -> str:
    lines = ["digraph walnut {"]
    if network.threshold_drops is not None:
        lines.append(f"  graph [threshold_drops={network.threshold_drops}];")
    lines.append("  node [style=filled];")
    # dormant nodes sit in their own cluster, outside the walnut body
    dormant = []
    for node in sorted(network.nodes):
        cls = partition.classes.get(node) if partition else None
        if cls is None:
            lines.append(f"  {_dot_id(node)};")
            continue
        stmt = f'  {_dot_id(node)} [class="{cls.value}", fillcolor="{FILL_COLORS[cls]}"];'
        (dormant if cls is NodeClass.DORMANT else lines).append(stmt)
    if dormant:
        lines.append("  subgraph cluster_dormant {")
        lines.append('    label="dormant";')
        lines.extend("  " + s for s in dormant)
        lines.append("  }")
    for (src, dst), e in sorted(network.edges.items()):
        lines.append(
            f"  {_dot_id(src)} -> {_dot_id(dst)} [total_drops={e.total_drops}, txn_count={e.txn_count}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_json(network: ThresholdNetwork, partition: WalnutPartition | None) -> str:
    nodes = []
    for node in sorted(network.nodes):
        cls = partition.classes.get(node) if partition else None
        idx = partition.indices.get(node) if partition else None
        nodes.append({
            "id": node,
            "class": cls.value if cls else None,
            "a_in": idx.a_in if idx else None,
            "a_out": idx.a_out if idx else None,
        })
    edges = [
        {"src": s, "dst": d, "total_drops": e.total_drops, "txn_count": e.txn_count}
        for (s, d), e in sorted(network.edges.items())
    ]
    doc = {"threshold_drops": network.threshold_drops, "nodes": nodes, "edges": edges}
    return json.dumps(doc, indent=2) + "\n"


def export_graph(network: ThresholdNetwork, partition: WalnutPartition | None, fmt: str) -> bytes:
    """Deterministic DOT or JSON rendering, nodes in lexicographic order."""
    if fmt == "dot":
        return _export_dot(network, partition).encode("utf-8")
    if fmt == "json":
        return _export_json(network, partition).encode("utf-8")
    raise NetworkError(f"unknown export format {fmt!r}; expected 'dot' or 'json'")
