"""Classification of seed-address flows into laundering patterns.

Pattern A: funds arrive (Phase 1), a band-matching two-way split sends the
small share to a long-lived address with change returned to the seed
(Phase 2), later spends drain the seed (Phase 3).  Pattern B: the split pays
the small share and sends change to a previously unseen address, emptying the
seed in that single transaction.  Everything else is None, with a structured
reason.

Shares are exact rationals over the output sum, so fees never skew the split
and band membership needs no tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chaingraph import AtGraph
from .ledger import AddressTag, Ledger, ROLE_EXCHANGE, TxRecord, balance_at

PATTERN_A = "A"
PATTERN_B = "B"
PATTERN_NONE = "None"

# Structured reasons a case conforms to neither pattern.
REASON_NO_BAND_SPLIT = "no_band_split_spend"
REASON_NO_PHASE3 = "no_spend_after_change_return"
REASON_CHANGE_REUSED = "change_address_not_fresh"
REASON_NOT_EMPTIED = "seed_not_emptied_by_split"
REASON_ACTIVITY_AFTER_SPLIT = "activity_after_split"

# High-volume collector addresses known to sit downstream of drain flows.
KNOWN_COLLECTOR_TAGS = (
    AddressTag("bc1q9wvygkq7h9xgcp59mc6ghzczrqlgrj9k3ey9tz", ROLE_EXCHANGE, "high-volume collector 1"),
    AddressTag("bc1qng0keqn7cq6p8qdt4rjnzdxrygnzq7nd0pju8q", ROLE_EXCHANGE, "high-volume collector 2"),
)

DEFAULT_BAND = (Fraction(19, 100), Fraction(20, 100))
DEFAULT_DUST_SATS = 546


class FlowError(ValueError):
    pass


class CandidateNotInOutputs(FlowError):
    def __init__(self, txid: str, candidate: str):
        super().__init__(f"address {candidate} is not an output of tx {txid}")


class SeedNotInGraph(FlowError):
    def __init__(self, seed: str):
        super().__init__(f"address {seed} is not a seed of the graph")


class NoPhase2(FlowError):
    def __init__(self, seed: str):
        super().__init__(f"case for {seed} has no phase-2 transaction")


@dataclass(frozen=True)
class ClassifyConfig:
    dust_sats: int = DEFAULT_DUST_SATS
    band_low: Fraction = DEFAULT_BAND[0]
    band_high: Fraction = DEFAULT_BAND[1]
    aggregator_k_min: int = 10


@dataclass(frozen=True)
class SplitReport:
    txid: str
    lba_address: str
    lba_share: Fraction
    change_share: Fraction
    fee_sats: int
    matches_lockbit_band: bool


@dataclass(frozen=True)
class TemporalityRecord:
    """Block-height offsets of phase-1/phase-3 txs relative to the phase-2 tx."""

    phase1_offsets: tuple[int, ...]
    phase3_offsets: tuple[int, ...]


@dataclass(frozen=True)
class AggregatorHit:
    txid: str
    aggregator: str
    input_count: int
    block_height: int
    tag: AddressTag | None = None


@dataclass(frozen=True)
class CaseReport:
    seed: str
    pattern: str
    phase1_txs: tuple[str, ...]
    phase2_tx: str | None
    phase3_txs: tuple[str, ...]
    split: SplitReport | None
    drained: bool
    residual_sats: int
    aggregators: tuple[str, ...]
    offsets: TemporalityRecord | None
    failure_reason: str | None = None


def split_ratio(tx: TxRecord, candidate: str,
                band_low: Fraction = DEFAULT_BAND[0],
                band_high: Fraction = DEFAULT_BAND[1]) -> SplitReport:
    """Exact output shares of ``candidate`` vs everything else in one tx."""
    lba_sats = sum(s.value_sats for s in tx.outputs if s.address == candidate)
    if not any(s.address == candidate for s in tx.outputs):
        raise CandidateNotInOutputs(tx.txid, candidate)
    total = tx.output_sum
    share = Fraction(lba_sats, total)
    return SplitReport(
        txid=tx.txid,
        lba_address=candidate,
        lba_share=share,
        change_share=1 - share,
        fee_sats=tx.fee,
        matches_lockbit_band=band_low <= share <= band_high,
    )


def _tx_key(tx: TxRecord) -> tuple[int, str]:
    return (tx.block_height, tx.txid)


def _find_phase2(spends: list[TxRecord], seed: str, cfg: ClassifyConfig):
    """First spend from the seed shaped as a band-matching two-way split."""
    for tx in spends:
        if len(tx.outputs) != 2 or tx.outputs[0].address == tx.outputs[1].address:
            continue
        for slot in tx.outputs:
            if slot.address == seed:
                continue
            report = split_ratio(tx, slot.address, cfg.band_low, cfg.band_high)
            if report.matches_lockbit_band:
                return tx, report
    return None, None


def _is_fresh(ledger: Ledger, address: str, before: tuple[int, str]) -> bool:
    """True when the address appears in no transaction ordered before ``before``."""
    return all(_tx_key(ledger.tx(t)) >= before for t in ledger.by_address(address))


def detect_aggregators(ledger: Ledger, phase3_addrs, k_min: int,
                       tags: dict[str, AddressTag] | None = None) -> list[AggregatorHit]:
    """Many-input, single-output consolidations spending from phase-3 addresses."""
    if k_min < 2:
        raise FlowError("k_min must be >= 2")
    tags = tags or {}
    hits: dict[str, AggregatorHit] = {}
    for addr in phase3_addrs:
        for tx in ledger.debits(addr):
            if tx.txid in hits:
                continue
            in_addrs = {s.address for s in tx.inputs}
            out_addrs = {s.address for s in tx.outputs}
            if len(in_addrs) >= k_min and len(out_addrs) == 1:
                aggregator = next(iter(out_addrs))
                hits[tx.txid] = AggregatorHit(
                    txid=tx.txid,
                    aggregator=aggregator,
                    input_count=len(in_addrs),
                    block_height=tx.block_height,
                    tag=tags.get(aggregator),
                )
    return sorted(hits.values(), key=lambda h: (h.block_height, h.txid))


def classify_case(g: AtGraph, ledger: Ledger, seed: str,
                  cfg: ClassifyConfig = ClassifyConfig()) -> CaseReport:
    """Assign the seed's flow to pattern A, B, or None, with supporting facts."""
    if seed not in g.seed_set:
        raise SeedNotInGraph(seed)

    credits = [t for t in ledger.credits(seed) if not any(s.address == seed for s in t.inputs)]
    spends = ledger.debits(seed)
    residual = balance_at(ledger, seed, ledger.max_height())
    drained = residual <= cfg.dust_sats

    phase2, split = _find_phase2(spends, seed, cfg)
    if phase2 is None:
        return CaseReport(
            seed=seed, pattern=PATTERN_NONE,
            phase1_txs=tuple(t.txid for t in credits),
            phase2_tx=None, phase3_txs=(), split=None,
            drained=drained, residual_sats=residual,
            aggregators=(), offsets=None,
            failure_reason=REASON_NO_BAND_SPLIT,
        )

    p2key = _tx_key(phase2)
    phase1 = [t for t in credits if _tx_key(t) < p2key]
    after = [t for t in spends if _tx_key(t) > p2key]
    change_addr = next(s.address for s in phase2.outputs if s.address != split.lba_address)

    offsets = TemporalityRecord(
        phase1_offsets=tuple(t.block_height - phase2.block_height for t in phase1),
        phase3_offsets=tuple(t.block_height - phase2.block_height for t in after),
    )

    pattern = PATTERN_NONE
    reason = None
    phase3: tuple[str, ...] = ()
    if change_addr == seed:
        if after:
            pattern = PATTERN_A
            phase3 = tuple(t.txid for t in after)
        else:
            reason = REASON_NO_PHASE3
    else:
        if not _is_fresh(ledger, change_addr, p2key):
            reason = REASON_CHANGE_REUSED
        elif after:
            reason = REASON_ACTIVITY_AFTER_SPLIT
        elif not drained:
            reason = REASON_NOT_EMPTIED
        else:
            pattern = PATTERN_B

    aggregators: tuple[str, ...] = ()
    if pattern == PATTERN_A:
        known = {t.address: t for t in KNOWN_COLLECTOR_TAGS}
        drain_addrs = sorted({s.address for txid in phase3
                              for s in ledger.tx(txid).outputs if s.address != seed})
        hits = detect_aggregators(ledger, drain_addrs, cfg.aggregator_k_min, tags=known)
        aggregators = tuple(dict.fromkeys(h.aggregator for h in hits))

    return CaseReport(
        seed=seed,
        pattern=pattern,
        phase1_txs=tuple(t.txid for t in phase1),
        phase2_tx=phase2.txid,
        phase3_txs=phase3,
        split=split,
        drained=drained,
        residual_sats=residual,
        aggregators=aggregators,
        offsets=None if pattern == PATTERN_NONE and reason == REASON_NO_BAND_SPLIT else offsets,
        failure_reason=reason,
    )


def temporality(report: CaseReport, ledger: Ledger) -> TemporalityRecord:
    """Recompute phase offsets against the phase-2 baseline from ledger heights."""
    if report.phase2_tx is None:
        raise NoPhase2(report.seed)
    base = ledger.tx(report.phase2_tx).block_height
    return TemporalityRecord(
        phase1_offsets=tuple(ledger.tx(t).block_height - base for t in report.phase1_txs),
        phase3_offsets=tuple(ledger.tx(t).block_height - base for t in report.phase3_txs),
    )


# ---------------------------------------------------------------------------
# serialization


def split_to_json(split: SplitReport) -> dict:
    return {
        "txid": split.txid,
        "lba_address": split.lba_address,
        "lba_share": float(split.lba_share),
        "lba_share_exact": f"{split.lba_share.numerator}/{split.lba_share.denominator}",
        "change_share": float(split.change_share),
        "fee_sats": split.fee_sats,
        "matches_lockbit_band": split.matches_lockbit_band,
    }


def case_to_json(report: CaseReport) -> dict:
    out = {
        "seed": report.seed,
        "pattern": report.pattern,
        "phase1_txs": list(report.phase1_txs),
        "phase2_tx": report.phase2_tx,
        "phase3_txs": list(report.phase3_txs),
        "split": split_to_json(report.split) if report.split else None,
        "drained": report.drained,
        "residual_sats": report.residual_sats,
        "aggregators": list(report.aggregators),
        "offsets": None,
        "failure_reason": report.failure_reason,
    }
    if report.offsets is not None:
        out["offsets"] = {
            "phase1": list(report.offsets.phase1_offsets),
            "phase3": list(report.offsets.phase3_offsets),
        }
    return out


def total_lba_receipts(reports, ledger: Ledger) -> int:
    """Sum of phase-2 small-share outputs across a batch, in integer sats."""
    total = 0
    for r in reports:
        if r.split is not None and r.phase2_tx is not None:
            tx = ledger.tx(r.phase2_tx)
            total += sum(s.value_sats for s in tx.outputs if s.address == r.split.lba_address)
    return total
