"""Behavioral labels, interaction transition graphs, and playbook filtering.

Each interaction contributes its ordered sequence of cluster labels; adjacent
pairs become directed edges whose probabilities are normalized per source
node.  The playbook is the subgraph of the globally highest-probability
transitions, keeping the top ``ceil(q * |E|)`` edges.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import requests

CATEGORY_INIT_END = "InitEnd"
CATEGORY_DECRYPTION = "Decryption"
CATEGORY_INFO_THREAT = "InfoThreat"
CATEGORY_RANSOM = "Ransom"
CATEGORIES = (CATEGORY_INIT_END, CATEGORY_DECRYPTION, CATEGORY_INFO_THREAT, CATEGORY_RANSOM)

CATEGORY_COLORS = {
    CATEGORY_INIT_END: "gray",
    CATEGORY_DECRYPTION: "red",
    CATEGORY_INFO_THREAT: "orange",
    CATEGORY_RANSOM: "blue",
}

ENV_SERVICE_URL = "PLAYBOOK_LLM_URL"
ENV_SERVICE_KEY = "PLAYBOOK_LLM_KEY"

LABEL_PROMPT = (
    "Given the following list of short sentences, return one concise behavioral "
    "description for the group (3-6 words). Focus on the underlying intent or "
    "action (e.g., greeting, negotiating, threatening, sharing files). "
    "Return only the description"
)

LABEL_WORDS_MIN = 3
LABEL_WORDS_MAX = 6


class PlaybookError(ValueError):
    pass


class MissingClusterLabel(PlaybookError):
    def __init__(self, cluster_id: int):
        self.cluster_id = cluster_id
        super().__init__(f"no label provided for cluster {cluster_id}")


class UnassignedMessage(PlaybookError):
    def __init__(self, msg_id: str):
        super().__init__(f"attacker message {msg_id} has no cluster assignment")


class EmptyGraph(PlaybookError):
    pass


class ServiceUnreachable(PlaybookError):
    pass


class MalformedServiceReply(PlaybookError):
    pass


@dataclass(frozen=True)
class ClusterLabel:
    cluster_id: int
    label: str
    category: str
    excluded: bool = False
    needs_review: bool = False

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise PlaybookError(f"category must be one of {CATEGORIES}")


# ---------------------------------------------------------------------------
# labeling


def guess_category(label: str) -> str:
    """Keyword heuristic mapping a behavioral label onto the four categories."""
    text = label.lower()
    if any(w in text for w in ("decrypt", "decryptor", "recovery", "restore")):
        return CATEGORY_DECRYPTION
    if any(w in text for w in ("pay", "price", "ransom", "money", "bitcoin", "btc",
                               "discount", "amount", "transaction", "wallet")):
        return CATEGORY_RANSOM
    if any(w in text for w in ("greet", "introduc", "hello", "goodbye", "closing",
                               "farewell", "end conversation", "demand")):
        return CATEGORY_INIT_END
    return CATEGORY_INFO_THREAT


def _label_word_count_ok(label: str) -> bool:
    return LABEL_WORDS_MIN <= len(label.split()) <= LABEL_WORDS_MAX


class LabelingService:
    """Chat-completion client configured from the environment."""

    def __init__(self, url: str | None = None, key: str | None = None,
                 model: str = "gpt-4o-mini", timeout: float = 30.0):
        self.url = url or os.environ.get(ENV_SERVICE_URL)
        self.key = key or os.environ.get(ENV_SERVICE_KEY)
        self.model = model
        self.timeout = timeout
        if not self.url:
            raise ServiceUnreachable(f"{ENV_SERVICE_URL} is not configured")

    def describe(self, messages: list[str]) -> str:
        content = LABEL_PROMPT + "\n\n" + "\n".join(f"- {m}" for m in messages)
        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        try:
            resp = requests.post(
                self.url,
                json={"model": self.model,
                      "messages": [{"role": "user", "content": content}]},
                headers=headers, timeout=self.timeout)
        except requests.RequestException as e:
            raise ServiceUnreachable(str(e)) from e
        if resp.status_code != 200:
            raise MalformedServiceReply(f"service returned HTTP {resp.status_code}")
        try:
            reply = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise MalformedServiceReply(f"unexpected reply shape: {e}") from e
        if not isinstance(reply, str) or not reply.strip():
            raise MalformedServiceReply("empty label text")
        return " ".join(reply.split())


def label_clusters(clusters: dict[int, list[str]], mode: str,
                   mapping: dict | None = None,
                   excluded: set[int] | frozenset[int] = frozenset(),
                   service: LabelingService | None = None) -> list[ClusterLabel]:
    """Produce one label per cluster, from a file mapping or a labeling service.

    ``clusters`` maps cluster id to that cluster's full message list.  In file
    mode every non-excluded id must be covered by ``mapping``.  In service mode
    a reply violating the 3-6 word constraint is retried once, then kept but
    flagged for manual review.
    """
    out: list[ClusterLabel] = []
    excluded = set(excluded)
    if mode == "file":
        mapping = mapping or {}
        for cid in sorted(clusters):
            entry = mapping.get(cid, mapping.get(str(cid)))
            if entry is None:
                if cid in excluded:
                    out.append(ClusterLabel(cid, f"excluded cluster {cid}",
                                            CATEGORY_INFO_THREAT, excluded=True))
                    continue
                raise MissingClusterLabel(cid)
            if isinstance(entry, str):
                entry = {"label": entry}
            out.append(ClusterLabel(
                cluster_id=cid,
                label=entry["label"],
                category=entry.get("category") or guess_category(entry["label"]),
                excluded=bool(entry.get("excluded", cid in excluded)),
            ))
        return out
    if mode == "service":
        svc = service or LabelingService()
        for cid in sorted(clusters):
            if cid in excluded:
                out.append(ClusterLabel(cid, f"excluded cluster {cid}",
                                        CATEGORY_INFO_THREAT, excluded=True))
                continue
            label = svc.describe(clusters[cid])
            review = False
            if not _label_word_count_ok(label):
                label = svc.describe(clusters[cid])
                review = not _label_word_count_ok(label)
            out.append(ClusterLabel(cid, label, guess_category(label),
                                    needs_review=review))
        return out
    raise PlaybookError("mode must be 'file' or 'service'")


def labels_to_json(labels) -> list[dict]:
    return [{"cluster_id": l.cluster_id, "label": l.label, "category": l.category,
             "excluded": l.excluded, "needs_review": l.needs_review}
            for l in sorted(labels, key=lambda l: l.cluster_id)]


def labels_from_json(rows) -> list[ClusterLabel]:
    return [ClusterLabel(int(r["cluster_id"]), r["label"], r["category"],
                         bool(r.get("excluded", False)), bool(r.get("needs_review", False)))
            for r in rows]


# ---------------------------------------------------------------------------
# transition graph


@dataclass(frozen=True)
class TransitionEdge:
    src: str
    dst: str
    count: int
    probability: float


@dataclass(frozen=True)
class TransitionGraph:
    nodes: tuple[str, ...]
    edges: tuple[TransitionEdge, ...]
    categories: dict[str, str]
    interaction_count: int

    def isolated_nodes(self) -> tuple[str, ...]:
        touched = {e.src for e in self.edges} | {e.dst for e in self.edges}
        return tuple(n for n in self.nodes if n not in touched)

    def sink_nodes(self) -> tuple[str, ...]:
        """Nodes that are entered but never left; candidates for truncation artifacts."""
        outs = {e.src for e in self.edges}
        ins = {e.dst for e in self.edges}
        return tuple(sorted(ins - outs))

    def source_nodes(self) -> tuple[str, ...]:
        outs = {e.src for e in self.edges}
        ins = {e.dst for e in self.edges}
        return tuple(sorted(outs - ins))


def build_transition_graph(interactions, assignments: dict[str, int], labels,
                           collapse_runs: bool = False) -> TransitionGraph:
    """Fold ordered label sequences from interactions into a transition graph.

    ``assignments`` maps msg_id to cluster id and must cover every attacker
    message.  Messages in excluded clusters are dropped before sequencing.
    """
    by_id = {l.cluster_id: l for l in labels}
    counts: dict[tuple[str, str], int] = {}
    seen_labels: set[str] = set()
    n_interactions = 0
    for interaction in interactions:
        n_interactions += 1
        seq: list[str] = []
        for msg in interaction.messages:
            if msg.sender_role != "attacker":
                continue
            if msg.msg_id not in assignments:
                raise UnassignedMessage(msg.msg_id)
            cluster = assignments[msg.msg_id]
            if cluster not in by_id:
                raise MissingClusterLabel(cluster)
            label = by_id[cluster]
            if label.excluded:
                continue
            if collapse_runs and seq and seq[-1] == label.label:
                continue
            seq.append(label.label)
        seen_labels.update(seq)
        for src, dst in zip(seq, seq[1:]):
            counts[(src, dst)] = counts.get((src, dst), 0) + 1

    out_totals: dict[str, int] = {}
    for (src, _), c in counts.items():
        out_totals[src] = out_totals.get(src, 0) + c
    edges = tuple(
        TransitionEdge(src, dst, c, c / out_totals[src])
        for (src, dst), c in sorted(counts.items())
    )
    categories = {l.label: l.category for l in labels if not l.excluded}
    nodes = tuple(sorted(seen_labels))
    return TransitionGraph(nodes=nodes, edges=edges,
                           categories={n: categories.get(n, CATEGORY_INFO_THREAT) for n in nodes},
                           interaction_count=n_interactions)


def filter_playbook(g: TransitionGraph, q: float = 0.15) -> TransitionGraph:
    """Keep the ceil(q * |E|) highest-probability edges and their endpoints."""
    if not 0 < q <= 1:
        raise PlaybookError("q must be in (0, 1]")
    if not g.edges:
        raise EmptyGraph("cannot filter a graph with no edges")
    keep = math.ceil(q * len(g.edges))
    ranked = sorted(g.edges, key=lambda e: (-e.probability, -e.count, e.src, e.dst))
    kept = tuple(sorted(ranked[:keep], key=lambda e: (e.src, e.dst)))
    nodes = tuple(sorted({e.src for e in kept} | {e.dst for e in kept}))
    return replace(g, nodes=nodes, edges=kept,
                   categories={n: g.categories.get(n, CATEGORY_INFO_THREAT) for n in nodes})


def filter_playbook_per_source(g: TransitionGraph, q: float = 0.15) -> TransitionGraph:
    """Variant ranking transitions within each source node instead of globally."""
    if not 0 < q <= 1:
        raise PlaybookError("q must be in (0, 1]")
    if not g.edges:
        raise EmptyGraph("cannot filter a graph with no edges")
    by_src: dict[str, list[TransitionEdge]] = {}
    for e in g.edges:
        by_src.setdefault(e.src, []).append(e)
    kept: list[TransitionEdge] = []
    for src in sorted(by_src):
        ranked = sorted(by_src[src], key=lambda e: (-e.probability, -e.count, e.src, e.dst))
        kept.extend(ranked[: math.ceil(q * len(ranked))])
    kept_t = tuple(sorted(kept, key=lambda e: (e.src, e.dst)))
    nodes = tuple(sorted({e.src for e in kept_t} | {e.dst for e in kept_t}))
    return replace(g, nodes=nodes, edges=kept_t,
                   categories={n: g.categories.get(n, CATEGORY_INFO_THREAT) for n in nodes})


# ---------------------------------------------------------------------------
# export


def graph_to_json(g: TransitionGraph) -> dict:
    return {
        "interaction_count": g.interaction_count,
        "nodes": [{"label": n, "category": g.categories[n]} for n in g.nodes],
        "edges": [{"src": e.src, "dst": e.dst, "count": e.count, "p": e.probability}
                  for e in g.edges],
    }


def graph_to_dot(g: TransitionGraph, drop_isolated: bool = False) -> str:
    isolated = set(g.isolated_nodes())
    lines = ["digraph playbook {", "  node [style=filled, fontname=\"Helvetica\"];"]
    for n in g.nodes:
        if drop_isolated and n in isolated:
            continue
        color = CATEGORY_COLORS[g.categories[n]]
        label = n.replace('"', '\\"')
        lines.append(f"  \"{label}\" [fillcolor={color}];")
    for e in g.edges:
        src = e.src.replace('"', '\\"')
        dst = e.dst.replace('"', '\\"')
        lines.append(f"  \"{src}\" -> \"{dst}\" [label=\"{e.probability:.3f}\", count={e.count}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_graph_json(g: TransitionGraph, fh) -> None:
    json.dump(graph_to_json(g), fh, indent=2, sort_keys=True)
    fh.write("\n")
