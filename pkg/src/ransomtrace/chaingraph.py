"""Bipartite address-transaction graphs around seed addresses.

Exploration counts transactions, not edges: ``steps=n`` reaches every
transaction at most ``n`` hops backward (funding side) or forward (spending
side) of a seed, so directed paths have at most ``2n`` edges.  The two
frontiers expand independently and never mix direction; a node reached both
ways is stored once.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

from .addresses import require_valid
from .ledger import Ledger

KIND_SPEND = "spend"      # address -> tx (the address funds the tx)
KIND_RECEIPT = "receipt"  # tx -> address (the tx pays the address)

EXPORT_FORMATS = ("dot", "graphml", "csv")
DIRECTIONS = ("both", "forward", "backward")


class GraphError(ValueError):
    pass


class EmptyGraph(GraphError):
    pass


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: str
    value_sats: int


@dataclass(frozen=True)
class AtGraph:
    address_nodes: frozenset[str]
    tx_nodes: frozenset[str]
    edges: tuple[Edge, ...]
    seed_set: tuple[str, ...]
    steps: int
    direction: str
    unknown_seeds: tuple[str, ...]
    tx_heights: dict[str, int]

    def sorted_addresses(self) -> list[str]:
        return sorted(self.address_nodes)

    def sorted_txs(self) -> list[str]:
        return sorted(self.tx_nodes, key=lambda t: (self.tx_heights[t], t))

    def is_empty(self) -> bool:
        return not self.address_nodes and not self.tx_nodes


def _expand(ledger: Ledger, seeds: list[str], n: int, backward: bool) -> set[str]:
    """Transactions within n hops of the seeds in one direction."""
    frontier = set(seeds)
    seen_addrs = set(seeds)
    seen_txs: set[str] = set()
    for _ in range(n):
        new_txs = set()
        for addr in frontier:
            for txid in ledger.by_address(addr):
                if txid in seen_txs:
                    continue
                tx = ledger.tx(txid)
                slots = tx.outputs if backward else tx.inputs
                if any(s.address == addr for s in slots):
                    new_txs.add(txid)
        if not new_txs:
            break
        seen_txs |= new_txs
        next_frontier = set()
        for txid in new_txs:
            tx = ledger.tx(txid)
            slots = tx.inputs if backward else tx.outputs
            next_frontier |= {s.address for s in slots}
        frontier = next_frontier - seen_addrs
        seen_addrs |= next_frontier
    return seen_txs


def build_graph(ledger: Ledger, seeds, n: int, direction: str = "both") -> AtGraph:
    """Bounded breadth-first expansion from seed addresses into an AtGraph."""
    seeds = [require_valid(s) for s in seeds]
    if n < 1:
        raise GraphError("steps must be >= 1")
    if direction not in DIRECTIONS:
        raise GraphError(f"direction must be one of {DIRECTIONS}")
    known = [s for s in seeds if ledger.has_address(s)]
    unknown = tuple(s for s in seeds if not ledger.has_address(s))
    if not known:
        raise EmptyGraph("no seed address appears in the ledger")

    tx_nodes: set[str] = set()
    if direction in ("both", "backward"):
        tx_nodes |= _expand(ledger, known, n, backward=True)
    if direction in ("both", "forward"):
        tx_nodes |= _expand(ledger, known, n, backward=False)

    address_nodes = set(known)
    edges: list[Edge] = []
    heights: dict[str, int] = {}
    for txid in sorted(tx_nodes, key=lambda t: (ledger.tx(t).block_height, t)):
        tx = ledger.tx(txid)
        heights[txid] = tx.block_height
        address_nodes |= tx.addresses()
        for s in tx.inputs:
            edges.append(Edge(s.address, txid, KIND_SPEND, s.value_sats))
        for s in tx.outputs:
            edges.append(Edge(txid, s.address, KIND_RECEIPT, s.value_sats))

    return AtGraph(
        address_nodes=frozenset(address_nodes),
        tx_nodes=frozenset(tx_nodes),
        edges=tuple(edges),
        seed_set=tuple(sorted(known)),
        steps=n,
        direction=direction,
        unknown_seeds=unknown,
        tx_heights=heights,
    )


# ---------------------------------------------------------------------------
# export


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_dot(g: AtGraph) -> str:
    lines = ["digraph flows {"]
    for addr in g.sorted_addresses():
        shape = "doublecircle" if addr in g.seed_set else "ellipse"
        lines.append(f"  {_dot_id(addr)} [shape={shape}, kind=address];")
    for txid in g.sorted_txs():
        lines.append(f"  {_dot_id(txid)} [shape=box, kind=tx, height_attr={g.tx_heights[txid]}];")
    for e in g.edges:
        lines.append(f"  {_dot_id(e.src)} -> {_dot_id(e.dst)} [label=\"{e.value_sats}\", kind={e.kind}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _render_graphml(g: AtGraph) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns"',
        '         xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"',
        '         xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns'
        ' http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">',
        '  <key id="d0" for="node" attr.name="kind" attr.type="string"/>',
        '  <key id="d1" for="edge" attr.name="sats" attr.type="long"/>',
        '  <key id="d2" for="edge" attr.name="kind" attr.type="string"/>',
        '  <graph id="G" edgedefault="directed">',
    ]
    for addr in g.sorted_addresses():
        out.append(f"    <node id={quoteattr(addr)}><data key=\"d0\">address</data></node>")
    for txid in g.sorted_txs():
        out.append(f"    <node id={quoteattr(txid)}><data key=\"d0\">tx</data></node>")
    for i, e in enumerate(g.edges):
        out.append(
            f"    <edge id=\"e{i}\" source={quoteattr(e.src)} target={quoteattr(e.dst)}>"
            f"<data key=\"d1\">{e.value_sats}</data>"
            f"<data key=\"d2\">{escape(e.kind)}</data></edge>"
        )
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"


def _render_csv(g: AtGraph) -> str:
    rows = ["src,dst,kind,sats"]
    for e in g.edges:
        rows.append(f"{e.src},{e.dst},{e.kind},{e.value_sats}")
    return "\n".join(rows) + "\n"


def export_graph(g: AtGraph, format: str) -> bytes:
    """Render the graph; output bytes are deterministic for a given graph."""
    if g.is_empty():
        raise EmptyGraph("nothing to export")
    if format == "dot":
        text = _render_dot(g)
    elif format == "graphml":
        text = _render_graphml(g)
    elif format == "csv":
        text = _render_csv(g)
    else:
        raise GraphError(f"format must be one of {EXPORT_FORMATS}")
    return text.encode("utf-8")
