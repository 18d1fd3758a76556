#!/usr/bin/env python3
"""Walk through the chat side: ingest, extract, segment, cluster, playbook.

Runs on the committed synthetic panel dump under demos/data/leak and the
checked-in 16x4 embedding fixture, so no embedding model is needed.
"""

import json
import pathlib
from collections import Counter

from ransomtrace.chatcorpus import (
    extract_addresses_report,
    ingest_leak_tables,
    segment_corpus,
)
from ransomtrace.cluster import kmeans_fit, read_embeddings, sweep_and_recommend
from ransomtrace.playbook import (
    build_transition_graph,
    filter_playbook,
    graph_to_dot,
    label_clusters,
)
from ransomtrace.textprep import normalize

HERE = pathlib.Path(__file__).resolve().parent
LEAK = HERE / "data" / "leak"
EMBEDDINGS = HERE.parent / "tests" / "data" / "embeddings_16x4.jsonl"
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)

corpus = ingest_leak_tables(LEAK)
print(f"tables loaded: {corpus.row_counts}")
print(f"user tags: {corpus.user_tag_counts()}")

addr_report = extract_addresses_report(corpus)
print(f"\naddresses in chat text: {addr_report.detected} detected, "
      f"{addr_report.unique_global} unique globally, "
      f"{addr_report.unique_per_chat_total} unique per chat, "
      f"{addr_report.checksum_failures} checksum failures dropped")

interactions = segment_corpus(corpus)
print(f"interactions after 3-hour-gap segmentation: {len(interactions)}")

attacker_msgs = {m.msg_id: m for cid in corpus.chat_ids()
                 for m in corpus.messages(cid, role="attacker")}
tokens = {mid: normalize(m.body, msg_id=mid).tokens for mid, m in attacker_msgs.items()}
sample = next(iter(tokens))
print(f"\npreprocessing sample {sample}: {' '.join(tokens[sample])!r}")

with EMBEDDINGS.open(encoding="utf-8") as fh:
    emb, warnings = read_embeddings(fh)
assert not warnings
sweep = sweep_and_recommend(emb, 2, 6, seed=3)
print(f"\nk sweep 2..6 recommends k={sweep.recommended_k} "
      f"(elbow estimate {sweep.elbow_k})")
for row in sweep.rows:
    print(f"  k={row.k}: inertia {row.inertia:.4f}  sil {row.silhouette:.3f}  "
          f"ch {row.calinski_harabasz:.1f}  db {row.davies_bouldin:.3f}")

model = kmeans_fit(emb, sweep.recommended_k, seed=3)
assignments = dict(zip(emb.ids, (int(c) for c in model.assignments)))

# File-mode labeling: name each cluster after the planted theme that dominates
# it (chat k holds theme k in the committed corpus).
THEME_LABELS = {
    "1": {"label": "introducing demands and stakes", "category": "InitEnd"},
    "2": {"label": "negotiating ransom price", "category": "Ransom"},
    "3": {"label": "requesting payment transfer", "category": "Ransom"},
    "4": {"label": "explaining decryption support steps", "category": "Decryption"},
}
mapping = {}
for cluster_id in sorted(set(assignments.values())):
    members = [mid for mid, c in assignments.items() if c == cluster_id]
    majority_chat = Counter(mid[1] for mid in members).most_common(1)[0][0]
    mapping[cluster_id] = THEME_LABELS[majority_chat]
labels = label_clusters({c: [] for c in mapping}, "file", mapping=mapping)
print("\ncluster labels (file mode):")
for l in labels:
    print(f"  cluster {l.cluster_id}: {l.label} [{l.category}]")

graph = build_transition_graph(interactions, assignments, labels)
playbook = filter_playbook(graph, 0.15)
print(f"\ntransition graph: {len(graph.nodes)} themes, {len(graph.edges)} edges "
      f"over {graph.interaction_count} interactions")
print(f"playbook (top 15%): {len(playbook.nodes)} themes, {len(playbook.edges)} edges")
for e in playbook.edges:
    print(f"  {e.src}  ->  {e.dst}  (p={e.probability:.2f}, n={e.count})")

(OUT / "demo_playbook.dot").write_text(graph_to_dot(playbook), encoding="utf-8")
print(f"\nwrote {OUT / 'demo_playbook.dot'}")
print("for a richer transition graph (nine themes surviving the filter), run:\n"
      "  ransomtrace playbook --interactions demos/data/playbook/interactions.jsonl \\\n"
      "      --assignments demos/data/playbook/assignments.jsonl \\\n"
      "      --labels demos/data/playbook/labels.json --q 0.15 --out demos/out/playbook")
