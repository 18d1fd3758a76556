"""Simplified UTXO-style transaction ledgers.

A ledger is an immutable, fully indexed list of transactions.  Amounts are
integer satoshis end to end (1 BTC = 100,000,000 sats); ratios only ever
appear at report time.  A transaction with no inputs is a coinbase and is
exempt from the fee rule.

On-disk format is one JSON record per line, fixed field order:

    {"txid":"<64 hex>","height":H,"time":T,"in":[{"addr":"...","sats":N}...],"out":[...]}
"""

from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass, field

from .addresses import BadAddressChecksum, is_valid_address, require_valid

SATS_PER_BTC = 100_000_000

_TXID_RE = re.compile(r"^[0-9a-f]{64}$")

RECORD_FIELDS = ("txid", "height", "time", "in", "out")
SLOT_FIELDS = ("addr", "sats")


class LedgerError(ValueError):
    """Base class for ledger parsing and validation failures."""


class MalformedRecord(LedgerError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class NegativeFee(LedgerError):
    def __init__(self, txid: str):
        self.txid = txid
        super().__init__(f"outputs exceed inputs in tx {txid}")


class DuplicateTxid(LedgerError):
    def __init__(self, txid: str):
        self.txid = txid
        super().__init__(f"duplicate txid {txid}")


@dataclass(frozen=True)
class TxSlot:
    """One input or output slot: a checksum-valid address and its amount."""

    address: str
    value_sats: int

    def __post_init__(self):
        require_valid(self.address)
        if not isinstance(self.value_sats, int) or self.value_sats < 0:
            raise LedgerError(f"negative or non-integer slot value: {self.value_sats!r}")


@dataclass(frozen=True)
class TxRecord:
    """A transaction: empty ``inputs`` means coinbase; fee is inputs minus outputs."""

    txid: str
    block_height: int
    timestamp: int
    inputs: tuple[TxSlot, ...]
    outputs: tuple[TxSlot, ...]

    def __post_init__(self):
        if not _TXID_RE.match(self.txid):
            raise LedgerError(f"txid must be 64 lowercase hex chars: {self.txid!r}")
        if self.block_height < 0:
            raise LedgerError(f"negative block height in tx {self.txid}")
        if not self.outputs:
            raise LedgerError(f"tx {self.txid} has no outputs")
        if self.inputs and self.fee < 0:
            raise NegativeFee(self.txid)

    @property
    def is_coinbase(self) -> bool:
        return not self.inputs

    @property
    def input_sum(self) -> int:
        return sum(s.value_sats for s in self.inputs)

    @property
    def output_sum(self) -> int:
        return sum(s.value_sats for s in self.outputs)

    @property
    def fee(self) -> int:
        """Fee in sats; 0 for coinbase by convention."""
        if self.is_coinbase:
            return 0
        return self.input_sum - self.output_sum

    def addresses(self) -> set[str]:
        return {s.address for s in self.inputs} | {s.address for s in self.outputs}


# Address roles used for tagging; LCA/LBA/LBIA follow the case glossary.
ROLE_LCA = "LCA"
ROLE_LBA = "LBA"
ROLE_LBIA = "LBIA"
ROLE_EXCHANGE = "EXCHANGE"
ROLE_CHANGE = "CHANGE"
ROLE_UNKNOWN = "UNKNOWN"

VALID_ROLES = frozenset({ROLE_LCA, ROLE_LBA, ROLE_LBIA, ROLE_EXCHANGE, ROLE_CHANGE, ROLE_UNKNOWN})


@dataclass(frozen=True)
class AddressTag:
    address: str
    role: str
    provenance: str = ""

    def __post_init__(self):
        if self.role not in VALID_ROLES:
            raise ValueError(f"unknown address role {self.role!r}")


class Ledger:
    """Immutable, ordered, fully indexed transaction set.

    Transactions are ordered by (block_height, txid); both indices are built
    once at construction and never mutated afterwards.
    """

    def __init__(self, transactions: list[TxRecord] | tuple[TxRecord, ...]):
        txs = sorted(transactions, key=lambda t: (t.block_height, t.txid))
        by_txid: dict[str, TxRecord] = {}
        by_address: dict[str, list[str]] = {}
        for tx in txs:
            if tx.txid in by_txid:
                raise DuplicateTxid(tx.txid)
            by_txid[tx.txid] = tx
            for addr in sorted(tx.addresses()):
                by_address.setdefault(addr, []).append(tx.txid)
        self._txs = tuple(txs)
        self._by_txid = by_txid
        self._by_address = by_address

    @property
    def transactions(self) -> tuple[TxRecord, ...]:
        return self._txs

    def __len__(self) -> int:
        return len(self._txs)

    def __iter__(self):
        return iter(self._txs)

    def tx(self, txid: str) -> TxRecord:
        return self._by_txid[txid]

    def has_tx(self, txid: str) -> bool:
        return txid in self._by_txid

    def by_address(self, address: str) -> tuple[str, ...]:
        """Txids touching the address (as input or output), ledger order."""
        return tuple(self._by_address.get(address, ()))

    def has_address(self, address: str) -> bool:
        return address in self._by_address

    def addresses(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_address))

    def max_height(self) -> int:
        return self._txs[-1].block_height if self._txs else 0

    def credits(self, address: str) -> list[TxRecord]:
        """Transactions paying the address, ledger order."""
        return [self.tx(t) for t in self.by_address(address)
                if any(s.address == address for s in self.tx(t).outputs)]

    def debits(self, address: str) -> list[TxRecord]:
        """Transactions spending from the address, ledger order."""
        return [self.tx(t) for t in self.by_address(address)
                if any(s.address == address for s in self.tx(t).inputs)]


# ---------------------------------------------------------------------------
# parse / serialize


def _parse_slot(obj, line_no: int) -> TxSlot:
    if not isinstance(obj, dict) or tuple(obj.keys()) != SLOT_FIELDS:
        raise MalformedRecord(line_no, f"slot must have exactly fields {SLOT_FIELDS} in order")
    addr, sats = obj["addr"], obj["sats"]
    if not isinstance(addr, str):
        raise MalformedRecord(line_no, "slot addr must be a string")
    if not isinstance(sats, int) or isinstance(sats, bool) or sats < 0:
        raise MalformedRecord(line_no, "slot sats must be a non-negative integer")
    if not is_valid_address(addr):
        raise BadAddressChecksum(addr)
    return TxSlot(addr, sats)


def _parse_record(line: str, line_no: int) -> TxRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedRecord(line_no, f"invalid JSON: {e.msg}") from e
    if not isinstance(obj, dict):
        raise MalformedRecord(line_no, "record must be a JSON object")
    if tuple(obj.keys()) != RECORD_FIELDS:
        raise MalformedRecord(line_no, f"record must have exactly fields {RECORD_FIELDS} in order")
    txid, height, time_, ins, outs = (obj[k] for k in RECORD_FIELDS)
    if not isinstance(txid, str) or not _TXID_RE.match(txid):
        raise MalformedRecord(line_no, "txid must be 64 lowercase hex chars")
    for name, v in (("height", height), ("time", time_)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise MalformedRecord(line_no, f"{name} must be a non-negative integer")
    if not isinstance(ins, list) or not isinstance(outs, list):
        raise MalformedRecord(line_no, "in/out must be arrays")
    if not outs:
        raise MalformedRecord(line_no, "out must be non-empty")
    inputs = tuple(_parse_slot(s, line_no) for s in ins)
    outputs = tuple(_parse_slot(s, line_no) for s in outs)
    return TxRecord(txid, height, time_, inputs, outputs)


def parse_ledger(stream) -> Ledger:
    """Parse a line-delimited ledger stream atomically.

    ``stream`` may be a text file object, a string, bytes, or an iterable of
    lines.  The first malformed record rejects the whole stream.
    """
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8")
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    txs: list[TxRecord] = []
    seen: set[str] = set()
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        tx = _parse_record(line, line_no)
        if tx.txid in seen:
            raise DuplicateTxid(tx.txid)
        seen.add(tx.txid)
        txs.append(tx)
    return Ledger(txs)


def _slot_json(slot: TxSlot) -> dict:
    return {"addr": slot.address, "sats": slot.value_sats}


def serialize_record(tx: TxRecord) -> str:
    obj = {
        "txid": tx.txid,
        "height": tx.block_height,
        "time": tx.timestamp,
        "in": [_slot_json(s) for s in tx.inputs],
        "out": [_slot_json(s) for s in tx.outputs],
    }
    return json.dumps(obj, separators=(",", ":"))


def serialize_ledger(ledger: Ledger) -> bytes:
    """Byte-deterministic serialization; parse(serialize(L)) == L."""
    return "".join(serialize_record(tx) + "\n" for tx in ledger).encode("utf-8")


# ---------------------------------------------------------------------------
# queries


def balance_at(ledger: Ledger, address: str, height: int) -> int:
    """Credits minus debits for the address over all txs at height <= ``height``."""
    require_valid(address)
    if height < 0:
        raise LedgerError("height must be non-negative")
    total = 0
    for txid in ledger.by_address(address):
        tx = ledger.tx(txid)
        if tx.block_height > height:
            continue
        total += sum(s.value_sats for s in tx.outputs if s.address == address)
        total -= sum(s.value_sats for s in tx.inputs if s.address == address)
    return total


@dataclass(frozen=True)
class ActivityCounts:
    """Both readings of "active": ever credited vs holding a nonzero final balance."""

    ever_credited: int
    nonzero_final_balance: int
    total: int


def active_address_counts(ledger: Ledger, addresses) -> ActivityCounts:
    addrs = list(addresses)
    top = ledger.max_height()
    credited = 0
    nonzero = 0
    for a in addrs:
        if any(s.address == a for t in ledger.by_address(a) for s in ledger.tx(t).outputs):
            credited += 1
        if ledger.has_address(a) and balance_at(ledger, a, top) > 0:
            nonzero += 1
    return ActivityCounts(credited, nonzero, len(addrs))
