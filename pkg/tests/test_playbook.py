import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ransomtrace.chatcorpus import ChatMessage, Interaction
from ransomtrace.playbook import (
    CATEGORY_COLORS,
    ClusterLabel,
    EmptyGraph,
    LabelingService,
    MalformedServiceReply,
    MissingClusterLabel,
    PlaybookError,
    ServiceUnreachable,
    TransitionEdge,
    TransitionGraph,
    UnassignedMessage,
    build_transition_graph,
    filter_playbook,
    filter_playbook_per_source,
    graph_to_dot,
    graph_to_json,
    guess_category,
    label_clusters,
)

from oracles import brute_pair_tally


def make_labels(names, excluded=()):
    cats = ["InitEnd", "Decryption", "InfoThreat", "Ransom"]
    return [ClusterLabel(i, name, cats[i % 4], excluded=name in excluded)
            for i, name in enumerate(names)]


def interactions_from(sequences, labels):
    """One interaction per label sequence; returns (interactions, assignments)."""
    index = {l.label: l.cluster_id for l in labels}
    interactions, assignments = [], {}
    n = 0
    for seq_no, seq in enumerate(sequences):
        msgs = []
        for name in seq:
            mid = f"m{n:05d}"
            n += 1
            msgs.append(ChatMessage("c1", mid, "attacker", name, 1000 + n))
            assignments[mid] = index[name]
        interactions.append(Interaction("c1", tuple(msgs)))
    return interactions, assignments


def test_abab_counts_and_probabilities():
    labels = make_labels(["A", "B"])
    interactions, assignments = interactions_from([["A", "B", "A", "B"]], labels)
    g = build_transition_graph(interactions, assignments, labels)
    edges = {(e.src, e.dst): e for e in g.edges}
    assert edges[("A", "B")].count == 2
    assert edges[("B", "A")].count == 1
    assert edges[("A", "B")].probability == 1.0
    assert edges[("B", "A")].probability == 1.0


def test_two_interactions_half_probability():
    labels = make_labels(["A", "B", "C"])
    interactions, assignments = interactions_from([["A", "B"], ["A", "C"]], labels)
    g = build_transition_graph(interactions, assignments, labels)
    probs = {(e.src, e.dst): e.probability for e in g.edges}
    assert probs == {("A", "B"): 0.5, ("A", "C"): 0.5}


def test_counts_match_brute_tally():
    rng = random.Random(5)
    names = ["A", "B", "C", "D", "E"]
    labels = make_labels(names)
    sequences = [[rng.choice(names) for _ in range(rng.randint(2, 9))] for _ in range(12)]
    interactions, assignments = interactions_from(sequences, labels)
    g = build_transition_graph(interactions, assignments, labels)
    tally = brute_pair_tally(sequences)
    assert {(e.src, e.dst): e.count for e in g.edges} == dict(tally)
    assert g.interaction_count == 12


def test_per_source_probabilities_sum_to_one():
    rng = random.Random(6)
    names = ["A", "B", "C", "D"]
    labels = make_labels(names)
    sequences = [[rng.choice(names) for _ in range(6)] for _ in range(10)]
    interactions, assignments = interactions_from(sequences, labels)
    g = build_transition_graph(interactions, assignments, labels)
    by_src = {}
    for e in g.edges:
        by_src.setdefault(e.src, []).append(e)
    for src, edges in by_src.items():
        assert abs(sum(e.probability for e in edges) - 1.0) <= 1e-12
        # exact rational check on the counts themselves
        total = sum(e.count for e in edges)
        assert all(e.probability == e.count / total for e in edges)


def test_excluded_clusters_dropped_before_sequencing():
    labels = make_labels(["A", "X", "B"], excluded={"X"})
    interactions, assignments = interactions_from([["A", "X", "B"]], labels)
    g = build_transition_graph(interactions, assignments, labels)
    assert {(e.src, e.dst) for e in g.edges} == {("A", "B")}
    assert "X" not in g.nodes


def test_unassigned_message_raises():
    labels = make_labels(["A", "B"])
    interactions, assignments = interactions_from([["A", "B"]], labels)
    assignments.pop("m00001")
    with pytest.raises(UnassignedMessage):
        build_transition_graph(interactions, assignments, labels)


def test_victim_messages_ignored_in_sequencing():
    labels = make_labels(["A", "B"])
    msgs = (
        ChatMessage("c1", "m1", "attacker", "A", 1),
        ChatMessage("c1", "m2", "victim", "noise", 2),
        ChatMessage("c1", "m3", "attacker", "B", 3),
    )
    g = build_transition_graph([Interaction("c1", msgs)], {"m1": 0, "m3": 1}, labels)
    assert {(e.src, e.dst) for e in g.edges} == {("A", "B")}


def test_collapse_runs_flag():
    labels = make_labels(["A", "B"])
    interactions, assignments = interactions_from([["A", "A", "B"]], labels)
    g_keep = build_transition_graph(interactions, assignments, labels)
    assert ("A", "A") in {(e.src, e.dst) for e in g_keep.edges}
    g_collapse = build_transition_graph(interactions, assignments, labels,
                                        collapse_runs=True)
    assert {(e.src, e.dst) for e in g_collapse.edges} == {("A", "B")}


def test_isolated_nodes_retained_and_flagged():
    labels = make_labels(["A", "B", "solo"])
    interactions, assignments = interactions_from([["A", "B"], ["solo"]], labels)
    g = build_transition_graph(interactions, assignments, labels)
    assert "solo" in g.nodes
    assert g.isolated_nodes() == ("solo",)


# ---------------------------------------------------------------------------
# filtering


def _graph20():
    names = [f"n{i}" for i in range(5)]
    edges = []
    for i, src in enumerate(names):
        dsts = [d for d in names if d != src]
        counts = [(i * 7 + j * 3) % 11 + 1 for j in range(4)]
        total = sum(counts)
        for dst, c in zip(dsts, counts):
            edges.append(TransitionEdge(src, dst, c, c / total))
    assert len(edges) == 20
    return TransitionGraph(tuple(names), tuple(edges),
                           {n: "InfoThreat" for n in names}, interaction_count=5)


def test_filter_keeps_exactly_three_of_twenty():
    g = _graph20()
    filtered = filter_playbook(g, 0.15)
    assert len(filtered.edges) == 3
    assert set(filtered.nodes) == {e.src for e in filtered.edges} | {e.dst for e in filtered.edges}


def test_filter_invariant_under_insertion_order():
    g = _graph20()
    baseline = filter_playbook(g, 0.15).edges
    rng = random.Random(9)
    for _ in range(10):
        shuffled = list(g.edges)
        rng.shuffle(shuffled)
        g2 = TransitionGraph(g.nodes, tuple(shuffled), g.categories, g.interaction_count)
        assert filter_playbook(g2, 0.15).edges == baseline


def test_filter_all_ties_resolved_lexicographically():
    names = ["a", "b", "c", "d"]
    edges = tuple(TransitionEdge(s, d, 1, 1 / 3.0)
                  for s in names for d in names if s != d)
    g = TransitionGraph(tuple(names), edges, {n: "Ransom" for n in names}, 1)
    kept = filter_playbook(g, 0.15).edges  # ceil(0.15 * 12) = 2
    assert [(e.src, e.dst) for e in kept] == [("a", "b"), ("a", "c")]


def test_filter_q_one_is_identity_modulo_isolated():
    g = _graph20()
    filtered = filter_playbook(g, 1.0)
    assert set(filtered.edges) == set(g.edges)
    assert set(filtered.nodes) == set(g.nodes)


def test_filter_never_drops_below_one_edge():
    labels = make_labels(["A", "B"])
    interactions, assignments = interactions_from([["A", "B"]], labels)
    g = build_transition_graph(interactions, assignments, labels)
    assert len(filter_playbook(g, 0.01).edges) == 1


def test_filter_empty_graph_rejected():
    g = TransitionGraph((), (), {}, 0)
    with pytest.raises(EmptyGraph):
        filter_playbook(g, 0.15)
    with pytest.raises(PlaybookError):
        filter_playbook(_graph20(), 0.0)


def test_per_source_variant_keeps_top_per_node():
    g = _graph20()
    filtered = filter_playbook_per_source(g, 0.25)  # ceil(0.25*4) = 1 per source
    assert len(filtered.edges) == 5
    assert {e.src for e in filtered.edges} == set(g.nodes)


def test_sink_and_source_diagnostics():
    names = ["in", "mid", "out"]
    edges = (TransitionEdge("in", "mid", 1, 1.0), TransitionEdge("mid", "out", 1, 1.0))
    g = TransitionGraph(tuple(names), edges, {n: "InitEnd" for n in names}, 1)
    assert g.sink_nodes() == ("out",)
    assert g.source_nodes() == ("in",)


# ---------------------------------------------------------------------------
# nine themes survive on the shipped demo fixture


def test_nine_behavioral_themes_survive_demo_filter(demo_playbook_graph):
    filtered = filter_playbook(demo_playbook_graph, 0.15)
    assert len(filtered.nodes) == 9


# ---------------------------------------------------------------------------
# labeling


def test_file_mapping_verbatim():
    labels = label_clusters({4: ["msg"]}, "file",
                            mapping={4: {"label": "waiting for decryptor delivery",
                                         "category": "Decryption"}})
    assert labels == [ClusterLabel(4, "waiting for decryptor delivery", "Decryption")]


def test_file_mapping_missing_cluster():
    clusters = {i: ["x"] for i in range(10)}
    mapping = {i: {"label": f"theme {i} described here", "category": "Ransom"}
               for i in range(10) if i != 9}
    with pytest.raises(MissingClusterLabel) as err:
        label_clusters(clusters, "file", mapping=mapping)
    assert err.value.cluster_id == 9


def test_category_heuristic():
    assert guess_category("waiting for decryptor delivery") == "Decryption"
    assert guess_category("negotiating ransom price down") == "Ransom"
    assert guess_category("polite greeting and introduction") == "InitEnd"
    assert guess_category("sharing exfiltrated file lists") == "InfoThreat"


class _StubHandler(BaseHTTPRequestHandler):
    replies: list[str] = []
    calls: list[dict] = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        _StubHandler.calls.append(json.loads(self.rfile.read(length)))
        reply = (_StubHandler.replies.pop(0) if _StubHandler.replies
                 else "explaining decryption steps calmly")
        body = json.dumps({"choices": [{"message": {"content": reply}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_service():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.replies = []
    _StubHandler.calls = []
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


def test_service_mode_happy_path(stub_service):
    _StubHandler.replies = ["requesting immediate ransom payment"]
    svc = LabelingService(url=stub_service, key="k")
    labels = label_clusters({0: ["pay now", "send btc"]}, "service", service=svc)
    assert labels[0].label == "requesting immediate ransom payment"
    assert labels[0].category == "Ransom"
    assert not labels[0].needs_review
    assert _StubHandler.calls[0]["messages"][0]["content"].count("pay now") == 1


def test_service_mode_retries_then_flags(stub_service):
    bad = "this label is far too long to pass the word constraint"
    _StubHandler.replies = [bad, bad]
    svc = LabelingService(url=stub_service, key="k")
    labels = label_clusters({0: ["x"]}, "service", service=svc)
    assert labels[0].needs_review
    assert len(_StubHandler.calls) == 2  # exactly one retry


def test_service_mode_retry_recovers(stub_service):
    _StubHandler.replies = ["way way way too many words in this one",
                            "threatening public data leak"]
    svc = LabelingService(url=stub_service, key="k")
    labels = label_clusters({0: ["x"]}, "service", service=svc)
    assert labels[0].label == "threatening public data leak"
    assert not labels[0].needs_review


def test_service_unreachable():
    svc = LabelingService(url="http://127.0.0.1:1/v1/chat", key="k", timeout=0.2)
    with pytest.raises(ServiceUnreachable):
        svc.describe(["x"])


def test_service_unconfigured(monkeypatch):
    monkeypatch.delenv("PLAYBOOK_LLM_URL", raising=False)
    with pytest.raises(ServiceUnreachable):
        LabelingService()


class _BrokenHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        body = b'{"unexpected": "shape"}'
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def test_malformed_reply():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _BrokenHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        svc = LabelingService(url=f"http://127.0.0.1:{server.server_port}/v1", key="k")
        with pytest.raises(MalformedServiceReply):
            svc.describe(["x"])
    finally:
        server.shutdown()


# ---------------------------------------------------------------------------
# export


def test_dot_export_colors_and_determinism():
    g = _graph20()
    dot = graph_to_dot(g)
    assert dot == graph_to_dot(g)
    assert "fillcolor=orange" in dot  # InfoThreat palette
    labels = make_labels(["greet", "pay"])
    interactions, assignments = interactions_from([["greet", "pay"]], labels)
    g2 = build_transition_graph(interactions, assignments, labels)
    dot2 = graph_to_dot(g2)
    for cat, color in CATEGORY_COLORS.items():
        assert color in ("gray", "red", "orange", "blue")
    assert "->" in dot2


def test_json_export_shape():
    g = _graph20()
    obj = graph_to_json(g)
    assert set(obj) == {"interaction_count", "nodes", "edges"}
    assert all(set(n) == {"label", "category"} for n in obj["nodes"])
    assert all(set(e) == {"src", "dst", "count", "p"} for e in obj["edges"])
