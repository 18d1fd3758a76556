import json
import random
from pathlib import Path

import pytest

from ransomtrace.chaingraph import build_graph
from ransomtrace.fixtures import generate_fixture
from ransomtrace.flowpatterns import ClassifyConfig, classify_case

TESTS_DIR = Path(__file__).resolve().parent
DEMO_DIR = TESTS_DIR.parent / "demos" / "data"
EMBEDDINGS_16X4 = TESTS_DIR / "data" / "embeddings_16x4.jsonl"

BATCH_SPEC_SEED = 2025
BATCH_GEN_SEED = 4242


def batch_spec(seed: int = BATCH_SPEC_SEED) -> dict:
    """Seed-case batch planted as 11 pattern A, 6 pattern B, 3 neither.

    Drain arity mirrors the reference case mix: six A cases drain in one tx,
    three in two, and the two multi-tx drains leave a small residue.
    Funding arity: nine single-funding cases, seven double, three triple.
    """
    rng = random.Random(seed)
    cases = []
    drains = [1] * 6 + [2] * 3 + [3, 5]
    residuals = [0] * 9 + [40_000, 25_000]
    phase1_a = [1] * 6 + [2] * 5
    for i in range(11):
        n3 = drains[i]
        offsets = sorted(rng.sample(range(1, 1200), k=n3))
        cases.append({
            "motif": "pattern_a",
            "ransom_sats": rng.randrange(20_000_000, 200_000_000),
            "share": repr(rng.uniform(0.19, 0.20)),
            "phase1_txs": phase1_a[i],
            "phase3_txs": n3,
            "phase3_offsets": offsets,
            "residual_sats": residuals[i],
        })
    for i in range(6):
        cases.append({
            "motif": "pattern_b",
            "ransom_sats": rng.randrange(20_000_000, 200_000_000),
            "share": repr(rng.uniform(0.19, 0.20)),
            "phase1_txs": 1 if i < 3 else 2,
        })
    for variant in ("off_band_split", "no_spend", "three_way"):
        cases.append({"motif": "neither", "phase1_txs": 3, "variant": variant})
    # extra non-seed motifs so the ledger is not only pattern flows
    cases.append({"motif": "aggregation", "inputs": 12})
    cases.append({"motif": "peel_chain", "length": 4})
    return {"cases": cases}


@pytest.fixture(scope="session")
def pattern_batch():
    spec = batch_spec()
    ledger, truth = generate_fixture(spec, seed=BATCH_GEN_SEED)
    seeds = [a for a, t in truth.items()
             if t["motif"] in ("pattern_a", "pattern_b", "neither")]
    assert len(seeds) == 20  # 11 + 6 + 3
    return ledger, truth, seeds


@pytest.fixture(scope="session")
def pattern_batch_reports(pattern_batch):
    ledger, truth, seeds = pattern_batch
    graph = build_graph(ledger, seeds, 2)
    cfg = ClassifyConfig()
    return {s: classify_case(graph, ledger, s, cfg) for s in seeds}


def load_demo_transitions():
    """The shipped playbook demo fixture as (interactions, assignments, labels)."""
    from ransomtrace.chatcorpus import ChatMessage, Interaction
    from ransomtrace.playbook import labels_from_json

    interactions = []
    with (DEMO_DIR / "playbook" / "interactions.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            msgs = tuple(ChatMessage(obj["chat_id"], m["msg_id"], m["sender_role"],
                                     "", m["timestamp"]) for m in obj["messages"])
            interactions.append(Interaction(obj["chat_id"], msgs))
    assignments = {}
    with (DEMO_DIR / "playbook" / "assignments.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            assignments[obj["msg_id"]] = obj["cluster"]
    labels = labels_from_json(json.loads(
        (DEMO_DIR / "playbook" / "labels.json").read_text(encoding="utf-8")))
    return interactions, assignments, labels


@pytest.fixture(scope="session")
def demo_playbook_graph():
    from ransomtrace.playbook import build_transition_graph

    interactions, assignments, labels = load_demo_transitions()
    return build_transition_graph(interactions, assignments, labels)
