"""Ransom-flow graph forensics and negotiation-playbook mining toolkit."""

from .addresses import BadAddressChecksum, is_valid_address
from .chaingraph import AtGraph, build_graph, export_graph
from .chatcorpus import (
    ChatMessage,
    Interaction,
    extract_btc_addresses,
    ingest_leak_tables,
    segment_interactions,
)
from .cluster import (
    ClusterModel,
    EmbeddingSet,
    MetricsRow,
    cluster_metrics,
    kmeans_fit,
    recommend_k,
    sweep_and_recommend,
)
from .fixtures import InvalidSpec, generate_fixture, write_fixture
from .flowpatterns import (
    CaseReport,
    ClassifyConfig,
    SplitReport,
    TemporalityRecord,
    classify_case,
    detect_aggregators,
    split_ratio,
    temporality,
)
from .ledger import (
    AddressTag,
    Ledger,
    TxRecord,
    TxSlot,
    balance_at,
    parse_ledger,
    serialize_ledger,
)
from .playbook import (
    ClusterLabel,
    TransitionGraph,
    build_transition_graph,
    filter_playbook,
    label_clusters,
)
from .textprep import TextPrepConfig, TokenSeq, normalize
from .ttp import ttp_diff

__version__ = "0.1.0"
