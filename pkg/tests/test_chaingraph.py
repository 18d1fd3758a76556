import json
import xml.etree.ElementTree as ET

import pytest

from ransomtrace.addresses import p2pkh_address, p2wpkh_address
from ransomtrace.chaingraph import (
    EmptyGraph,
    KIND_RECEIPT,
    KIND_SPEND,
    build_graph,
    export_graph,
)
from ransomtrace.fixtures import generate_fixture
from ransomtrace.ledger import parse_ledger

A = p2pkh_address(b"\x0a" * 20)
B = p2pkh_address(b"\x0b" * 20)
C = p2wpkh_address(b"\x0c" * 20)
V = p2wpkh_address(b"\x0d" * 20)


def _line(n, height, ins, outs):
    return json.dumps({
        "txid": f"{n:064x}", "height": height, "time": height * 600,
        "in": [{"addr": a, "sats": v} for a, v in ins],
        "out": [{"addr": a, "sats": v} for a, v in outs],
    }, separators=(",", ":"))


@pytest.fixture()
def chain_ledger():
    # tx1 pays A (funded by V), tx2 moves A -> B, tx3 moves B -> C
    return parse_ledger("\n".join([
        _line(1, 0, [(V, 1000)], [(A, 1000)]),
        _line(2, 1, [(A, 1000)], [(B, 1000)]),
        _line(3, 2, [(B, 1000)], [(C, 1000)]),
    ]))


def test_one_step_exploration_excludes_second_hop(chain_ledger):
    g = build_graph(chain_ledger, [A], n=1)
    assert g.tx_nodes == {f"{1:064x}", f"{2:064x}"}
    assert g.address_nodes == {V, A, B}
    assert f"{3:064x}" not in g.tx_nodes


def test_two_step_exploration_reaches_whole_chain(chain_ledger):
    g = build_graph(chain_ledger, [A], n=2)
    assert g.tx_nodes == {f"{1:064x}", f"{2:064x}", f"{3:064x}"}
    assert g.address_nodes == {V, A, B, C}


def test_direction_flags(chain_ledger):
    forward = build_graph(chain_ledger, [A], n=1, direction="forward")
    backward = build_graph(chain_ledger, [A], n=1, direction="backward")
    assert forward.tx_nodes == {f"{2:064x}"}
    assert backward.tx_nodes == {f"{1:064x}"}


def test_unknown_seed_reported_not_fatal(chain_ledger):
    ghost = p2pkh_address(b"\x0e" * 20)
    g = build_graph(chain_ledger, [A, ghost], n=1)
    assert g.unknown_seeds == (ghost,)
    assert A in g.seed_set


def test_all_seeds_unknown_is_empty_graph(chain_ledger):
    ghost = p2pkh_address(b"\x0e" * 20)
    with pytest.raises(EmptyGraph):
        build_graph(chain_ledger, [ghost], n=1)


def test_pattern_a_fixture_graph_contains_all_phases():
    led, truth = generate_fixture(
        {"motif": "pattern_a", "ransom_sats": 50_000_000, "share": "0.192"}, 13)
    (seed_addr, fact), = truth.items()
    g = build_graph(led, [seed_addr], n=2)
    for txid in fact["phase1_txids"] + [fact["phase2_txid"]] + fact["phase3_txids"]:
        assert txid in g.tx_nodes
    assert fact["lba_address"] in g.address_nodes


def test_bipartite_and_edge_values_match_slots(pattern_batch):
    led, _, seeds = pattern_batch
    g = build_graph(led, seeds, n=2)
    for e in g.edges:
        if e.kind == KIND_SPEND:
            assert e.src in g.address_nodes and e.dst in g.tx_nodes
            tx = led.tx(e.dst)
            assert any(s.address == e.src and s.value_sats == e.value_sats
                       for s in tx.inputs)
        else:
            assert e.kind == KIND_RECEIPT
            assert e.src in g.tx_nodes and e.dst in g.address_nodes
            tx = led.tx(e.src)
            assert any(s.address == e.dst and s.value_sats == e.value_sats
                       for s in tx.outputs)


def test_node_set_monotone_in_steps(pattern_batch):
    led, _, seeds = pattern_batch
    prev_addr, prev_tx = set(), set()
    for n in (1, 2, 3):
        g = build_graph(led, seeds, n=n)
        assert prev_addr <= g.address_nodes
        assert prev_tx <= g.tx_nodes
        prev_addr, prev_tx = set(g.address_nodes), set(g.tx_nodes)


def test_seed_containment(pattern_batch):
    led, _, seeds = pattern_batch
    g = build_graph(led, seeds, n=1)
    for s in seeds:
        assert s in g.address_nodes


def test_every_node_within_step_bound(pattern_batch):
    # at n=1 every included tx must touch a seed directly, and every address
    # must be a seed or an endpoint of such a tx
    led, _, seeds = pattern_batch
    g = build_graph(led, seeds, n=1)
    seed_set = set(seeds)
    for txid in g.tx_nodes:
        assert led.tx(txid).addresses() & seed_set
    for addr in g.address_nodes:
        assert addr in seed_set or any(
            addr in led.tx(t).addresses() for t in g.tx_nodes)


# ---------------------------------------------------------------------------
# export


def test_smallest_graph_dot():
    led = parse_ledger(_line(1, 0, [], [(A, 5)]))
    g = build_graph(led, [A], n=1)
    dot = export_graph(g, "dot").decode()
    assert dot.count("shape=box") == 1
    assert dot.count("shape=") >= 2
    assert "->" in dot


def test_export_deterministic(chain_ledger):
    g = build_graph(chain_ledger, [A], n=2)
    for fmt in ("dot", "graphml", "csv"):
        assert export_graph(g, fmt) == export_graph(g, fmt)


def test_empty_export_rejected(chain_ledger):
    g = build_graph(chain_ledger, [A], n=1)
    empty = type(g)(frozenset(), frozenset(), (), (), 1, "both", (), {})
    with pytest.raises(EmptyGraph):
        export_graph(empty, "dot")


def test_csv_edge_list_shape(chain_ledger):
    g = build_graph(chain_ledger, [A], n=1)
    rows = export_graph(g, "csv").decode().splitlines()
    assert rows[0] == "src,dst,kind,sats"
    assert len(rows) == 1 + len(g.edges)
    for row in rows[1:]:
        src, dst, kind, sats = row.split(",")
        assert kind in ("spend", "receipt")
        assert int(sats) >= 0


GRAPHML_NS = "{http://graphml.graphdrawing.org/xmlns}"


def test_graphml_validates_structurally(pattern_batch):
    """Structural GraphML oracle: namespace, key declarations, id resolution."""
    led, truth, _ = pattern_batch
    seed_addr = next(a for a, t in truth.items() if t["motif"] == "pattern_a")
    g = build_graph(led, [seed_addr], n=2)
    doc = ET.fromstring(export_graph(g, "graphml"))
    assert doc.tag == f"{GRAPHML_NS}graphml"
    keys = {k.attrib["id"]: k.attrib for k in doc.findall(f"{GRAPHML_NS}key")}
    assert {"d0", "d1", "d2"} <= set(keys)
    graph = doc.find(f"{GRAPHML_NS}graph")
    assert graph is not None and graph.attrib["edgedefault"] == "directed"
    node_ids = [n.attrib["id"] for n in graph.findall(f"{GRAPHML_NS}node")]
    assert len(node_ids) == len(set(node_ids))
    assert set(node_ids) == set(g.address_nodes) | set(g.tx_nodes)
    for edge in graph.findall(f"{GRAPHML_NS}edge"):
        assert edge.attrib["source"] in node_ids
        assert edge.attrib["target"] in node_ids
        for data in edge.findall(f"{GRAPHML_NS}data"):
            assert data.attrib["key"] in keys
