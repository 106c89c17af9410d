"""Ledger analytics: filtering, concentration indices, Flow Index and walnut decomposition."""

__version__ = "0.1.0"

from .concentration import (
    benchmark_shares,
    effective_count,
    hh_index,
    modified_hh,
    modified_inverse_hh,
    normalize,
)
from .flows import (
    DailyFlowPair,
    FlowIndex,
    NodeClass,
    build_all_daily_flows,
    build_daily_flows,
    classify_node,
    flow_index,
    flow_table,
)
from .ingest import (
    FilterReport,
    MalformedRecord,
    TransactionRecord,
    filter_partial_payments,
    filter_stream,
    filter_xrp_xrp,
    parse_ledger,
    yearly_summary,
)
from .network import (
    ThresholdNetwork,
    WalnutPartition,
    degree_ccdf,
    export_graph,
    induced_network,
    select_big_nodes,
    walnut_decomposition,
)
from .stats import (
    daily_aggregate,
    dft_magnitudes,
    empirical_ccdf,
    pareto_index,
    powerlaw_correlation_fit,
    weekly_peak_score,
)
from .synth import SynthConfig, gen_archetype_account, gen_ledger
