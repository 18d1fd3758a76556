"""Deterministic synthetic ledgers with planted flow motifs.

Motifs: ``pattern_a`` (split with change back to the seed, later drained),
``pattern_b`` (split with a fresh change address, seed emptied at once),
``neither`` (conforms to no pattern), ``aggregation`` (many-input single-output
consolidation), ``peel_chain``.  Identical (spec, seed) pairs serialize to
identical bytes; every planted fact is recorded in a ground-truth sidecar so
detectors can be scored against it.
"""

from __future__ import annotations

import json
import math
import random
from fractions import Fraction
from pathlib import Path

from .addresses import p2pkh_address, p2sh_address, p2wpkh_address
from .ledger import Ledger, TxRecord, TxSlot, serialize_ledger

MOTIFS = ("pattern_a", "pattern_b", "neither", "aggregation", "peel_chain")

GENESIS_TIME = 1_700_000_000
SECONDS_PER_BLOCK = 600


class InvalidSpec(ValueError):
    """The motif description is inconsistent or not generatable."""


def _as_fraction(value) -> Fraction:
    # str() round-trips floats through their shortest decimal form, which is
    # what a human writing "0.195" meant; exact ints/Fractions pass through.
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


class _Minter:
    """Deterministic address/txid factory backed by one seeded RNG."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self._used: set[str] = set()

    def txid(self) -> str:
        return self.rng.randbytes(32).hex()

    def address(self, kind: str = "bech32") -> str:
        while True:
            payload = self.rng.randbytes(20)
            if kind == "bech32":
                addr = p2wpkh_address(payload)
            elif kind == "base58":
                addr = p2pkh_address(payload)
            elif kind == "p2sh":
                addr = p2sh_address(payload)
            else:
                raise InvalidSpec(f"unknown address kind {kind!r}")
            if addr not in self._used:
                self._used.add(addr)
                return addr


def _tx(minter: _Minter, height: int, inputs, outputs) -> TxRecord:
    return TxRecord(
        txid=minter.txid(),
        block_height=height,
        timestamp=GENESIS_TIME + height * SECONDS_PER_BLOCK,
        inputs=tuple(TxSlot(a, v) for a, v in inputs),
        outputs=tuple(TxSlot(a, v) for a, v in outputs),
    )


def _split_even(total: int, parts: int) -> list[int]:
    if parts < 1 or total < parts:
        raise InvalidSpec(f"cannot split {total} sats into {parts} parts")
    base, rem = divmod(total, parts)
    return [base + rem] + [base] * (parts - 1)


def _band_lba_sats(share: Fraction, output_sum: int, band: tuple[Fraction, Fraction]) -> int:
    """Integer LBA amount whose exact share stays inside the requested band."""
    lo, hi = band
    want = round(share * output_sum)
    if lo <= share <= hi:
        lo_sats = math.ceil(lo * output_sum)
        hi_sats = math.floor(hi * output_sum)
        if lo_sats > hi_sats:
            raise InvalidSpec(f"output sum {output_sum} too small to plant a share in band")
        return min(max(want, lo_sats), hi_sats)
    return want


class _CaseBuilder:
    def __init__(self, minter: _Minter, base_height: int):
        self.minter = minter
        self.base = base_height
        self.txs: list[TxRecord] = []

    def fund(self, address: str, sats: int, height: int) -> TxRecord:
        """Coinbase paying a victim/source address (keeps all balances non-negative)."""
        tx = _tx(self.minter, height, [], [(address, sats)])
        self.txs.append(tx)
        return tx

    def add(self, height: int, inputs, outputs) -> TxRecord:
        tx = _tx(self.minter, height, inputs, outputs)
        self.txs.append(tx)
        return tx


def _build_split_case(case: dict, builder: _CaseBuilder, pattern: str) -> tuple[str, dict]:
    ransom = int(case.get("ransom_sats", 100_000_000))
    share = _as_fraction(case.get("share", "0.195"))
    fee = int(case.get("fee_sats", 0))
    n1 = int(case.get("phase1_txs", 1))
    band = (_as_fraction(case.get("band_low", "0.19")), _as_fraction(case.get("band_high", "0.20")))
    if ransom <= 0 or fee < 0 or n1 < 1:
        raise InvalidSpec("ransom_sats must be positive, fee_sats >= 0, phase1_txs >= 1")

    minter, base = builder.minter, builder.base
    seed_addr = minter.address("bech32")
    lba = minter.address("base58")

    # Phase 1: victims pay the seed, one funding tx per victim.
    parts = _split_even(ransom, n1)
    phase1 = []
    for i, amount in enumerate(parts):
        victim = minter.address("base58")
        h = base - n1 + i
        builder.fund(victim, amount + fee, h - 5)
        phase1.append(builder.add(h, [(victim, amount + fee)], [(seed_addr, amount)]))

    # Phase 2: the band split.
    output_sum = ransom - fee
    if output_sum <= 0:
        raise InvalidSpec("fee eats the whole ransom")
    lba_sats = _band_lba_sats(share, output_sum, band)
    change = output_sum - lba_sats
    if change <= 0:
        raise InvalidSpec("no change left after the split")

    truth = {
        "motif": pattern,
        "pattern": "A" if pattern == "pattern_a" else "B",
        "seed": seed_addr,
        "lba_address": lba,
        "lba_sats": lba_sats,
        "phase2_output_sum": output_sum,
        "phase1_txids": [t.txid for t in phase1],
        "phase3_txids": [],
        "drain_addresses": [],
    }

    if pattern == "pattern_b":
        fresh = minter.address("bech32")
        tx2 = builder.add(base, [(seed_addr, ransom)], [(lba, lba_sats), (fresh, change)])
        truth.update(phase2_txid=tx2.txid, change_address=fresh, residual_sats=0, drained=True,
                     phase3_offsets=[])
        return seed_addr, truth

    # pattern_a: change returns to the seed, later spends drain it.
    tx2 = builder.add(base, [(seed_addr, ransom)], [(lba, lba_sats), (seed_addr, change)])
    n3 = int(case.get("phase3_txs", 1))
    offsets = list(case.get("phase3_offsets", range(1, n3 + 1)))
    residual = int(case.get("residual_sats", 0))
    if n3 < 1 or len(offsets) != n3 or any(o <= 0 for o in offsets):
        raise InvalidSpec("phase3_offsets must be positive and match phase3_txs")
    if residual < 0 or change - residual < n3 * (fee + 1):
        raise InvalidSpec("change too small to drain over phase3_txs transactions")

    spendable = change - residual
    drains = []
    phase3 = []
    for off, amount in zip(offsets, _split_even(spendable, n3)):
        drain = minter.address("bech32")
        drains.append(drain)
        phase3.append(builder.add(base + off, [(seed_addr, amount)], [(drain, amount - fee)]))
    truth.update(phase2_txid=tx2.txid, change_address=seed_addr,
                 phase3_txids=[t.txid for t in phase3], drain_addresses=drains,
                 residual_sats=residual, drained=residual <= int(case.get("dust_sats", 546)),
                 phase3_offsets=offsets)
    return seed_addr, truth


def _build_neither_case(case: dict, builder: _CaseBuilder) -> tuple[str, dict]:
    ransom = int(case.get("ransom_sats", 90_000_000))
    variant = case.get("variant", "off_band_split")
    n1 = int(case.get("phase1_txs", 3))
    minter, base = builder.minter, builder.base
    seed_addr = minter.address("bech32")
    phase1 = []
    for i, amount in enumerate(_split_even(ransom, n1)):
        victim = minter.address("base58")
        h = base - n1 + i
        builder.fund(victim, amount, h - 5)
        phase1.append(builder.add(h, [(victim, amount)], [(seed_addr, amount)]))
    truth = {
        "motif": "neither",
        "pattern": "None",
        "seed": seed_addr,
        "phase1_txids": [t.txid for t in phase1],
        "variant": variant,
    }
    if variant == "no_spend":
        truth["residual_sats"] = ransom
        return seed_addr, truth
    if variant == "off_band_split":
        a, b = minter.address("bech32"), minter.address("base58")
        half = ransom // 2
        builder.add(base, [(seed_addr, ransom)], [(a, half), (b, ransom - half)])
        truth["residual_sats"] = 0
        return seed_addr, truth
    if variant == "three_way":
        outs = _split_even(ransom, 3)
        slots = [(minter.address("bech32"), v) for v in outs]
        builder.add(base, [(seed_addr, ransom)], slots)
        truth["residual_sats"] = 0
        return seed_addr, truth
    raise InvalidSpec(f"unknown neither variant {variant!r}")


def _build_aggregation_case(case: dict, builder: _CaseBuilder) -> tuple[str, dict]:
    k = int(case.get("inputs", 12))
    each = int(case.get("input_sats", 5_000_000))
    fee = int(case.get("fee_sats", 0))
    if k < 2 or each <= fee:
        raise InvalidSpec("aggregation needs inputs >= 2 and input_sats > fee_sats")
    minter, base = builder.minter, builder.base
    sources = [minter.address("bech32") for _ in range(k)]
    builder.add(base - 5, [], [(s, each) for s in sources])
    aggregator = minter.address("bech32")
    tx = builder.add(base, [(s, each) for s in sources], [(aggregator, k * each - fee)])
    truth = {
        "motif": "aggregation",
        "aggregator": aggregator,
        "txid": tx.txid,
        "input_addresses": sources,
        "k": k,
    }
    return aggregator, truth


def _build_peel_case(case: dict, builder: _CaseBuilder) -> tuple[str, dict]:
    length = int(case.get("length", 4))
    start_sats = int(case.get("start_sats", 50_000_000))
    peel = _as_fraction(case.get("peel_fraction", "0.1"))
    fee = int(case.get("fee_sats", 0))
    if length < 1 or not 0 < peel < 1:
        raise InvalidSpec("peel_chain needs length >= 1 and 0 < peel_fraction < 1")
    minter, base = builder.minter, builder.base
    start = minter.address("bech32")
    builder.fund(start, start_sats, base - 5)
    hops, peels, current, amount = [], [], start, start_sats
    for i in range(length):
        peel_sats = int(peel * (amount - fee))
        rest = amount - fee - peel_sats
        if peel_sats < 1 or rest < 1:
            raise InvalidSpec("peel chain ran out of funds")
        peel_addr = minter.address("base58")
        nxt = minter.address("bech32")
        tx = builder.add(base + i, [(current, amount)], [(peel_addr, peel_sats), (nxt, rest)])
        hops.append(tx.txid)
        peels.append(peel_addr)
        current, amount = nxt, rest
    truth = {
        "motif": "peel_chain",
        "start": start,
        "txids": hops,
        "peel_addresses": peels,
        "length": length,
    }
    return start, truth


_BUILDERS = {
    "neither": _build_neither_case,
    "aggregation": _build_aggregation_case,
    "peel_chain": _build_peel_case,
}


def generate_fixture(spec: dict, seed: int) -> tuple[Ledger, dict]:
    """Build a ledger from a motif description; returns (ledger, truth sidecar).

    ``spec`` is either a single case ``{"motif": ...}`` or ``{"cases": [...]}``.
    The sidecar maps each case's anchor address (the seed for the patterned
    motifs) to the planted facts.
    """
    if not isinstance(spec, dict):
        raise InvalidSpec("spec must be a dict")
    cases = spec.get("cases", [spec] if "motif" in spec else None)
    if not cases or not isinstance(cases, list):
        raise InvalidSpec("spec must contain a motif or a non-empty cases list")

    rng = random.Random(seed)
    minter = _Minter(rng)
    txs: list[TxRecord] = []
    truth: dict[str, dict] = {}
    for i, case in enumerate(cases):
        if not isinstance(case, dict) or case.get("motif") not in MOTIFS:
            raise InvalidSpec(f"case {i}: motif must be one of {MOTIFS}")
        base = int(case.get("base_height", 100 + 50 * i))
        if base < 20:
            raise InvalidSpec(f"case {i}: base_height must be >= 20")
        builder = _CaseBuilder(minter, base)
        motif = case["motif"]
        if motif in ("pattern_a", "pattern_b"):
            anchor, fact = _build_split_case(case, builder, motif)
        else:
            anchor, fact = _BUILDERS[motif](case, builder)
        fact["base_height"] = base
        truth[anchor] = fact
        txs.extend(builder.txs)
    return Ledger(txs), truth


def write_fixture(spec: dict, seed: int, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>`` (ledger jsonl) and the ``<path minus suffix>.truth.json`` sidecar."""
    ledger, truth = generate_fixture(spec, seed)
    path = Path(path)
    sidecar = path.with_suffix("").with_suffix(".truth.json")
    path.write_bytes(serialize_ledger(ledger))
    sidecar.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, sidecar
