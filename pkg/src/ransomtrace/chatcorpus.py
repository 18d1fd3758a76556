"""Negotiation-chat corpus: leak-table ingestion, address extraction, segmentation.

Tables arrive as CSV files named after the leak schema (``chats``, ``users``,
``visits``, ``btc_addresses``, ``invites``); any subset may be present.
Messages are re-sorted by timestamp on ingest, and role filtering is a view
so victim turns stay available for segmentation timing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .addresses import (
    BASE58_CANDIDATE,
    BECH32_CANDIDATE,
    KIND_BASE58,
    KIND_BECH32,
    is_valid_base58_address,
    is_valid_bech32_address,
)

SENDER_ROLES = ("attacker", "victim", "system")

DEFAULT_GAP_SECONDS = 10_800  # three hours

TABLE_COLUMNS = {
    "chats": ["chat_id", "msg_id", "sender_role", "timestamp_iso8601", "body"],
    "users": ["username", "tag"],
    "visits": ["username", "timestamp_iso8601"],
    "btc_addresses": ["address"],
    "invites": ["address"],
}


class CorpusError(ValueError):
    pass


class MalformedRow(CorpusError):
    def __init__(self, file: str, line_no: int, reason: str):
        self.file = file
        self.line_no = line_no
        super().__init__(f"{file}:{line_no}: {reason}")


class UnknownColumn(CorpusError):
    def __init__(self, file: str, columns):
        self.file = file
        super().__init__(f"{file}: unexpected header {list(columns)!r}")


@dataclass(frozen=True)
class ChatMessage:
    chat_id: str
    msg_id: str
    sender_role: str
    body: str
    timestamp: int

    def __post_init__(self):
        if self.sender_role not in SENDER_ROLES:
            raise CorpusError(f"sender_role must be one of {SENDER_ROLES}")
        if self.timestamp <= 0:
            raise CorpusError("timestamp must be positive unix seconds")


@dataclass(frozen=True)
class Interaction:
    chat_id: str
    messages: tuple[ChatMessage, ...]

    @property
    def start(self) -> int:
        return self.messages[0].timestamp

    @property
    def end(self) -> int:
        return self.messages[-1].timestamp


def parse_iso8601(text: str) -> int:
    """ISO-8601 timestamp to unix seconds; naive times are taken as UTC."""
    value = text.strip()
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


@dataclass
class Corpus:
    chats: dict[str, list[ChatMessage]] = field(default_factory=dict)
    users: list[tuple[str, str]] = field(default_factory=list)
    visits: list[tuple[str, int]] = field(default_factory=list)
    btc_addresses: list[str] = field(default_factory=list)
    invites: list[str] = field(default_factory=list)
    row_counts: dict[str, int] = field(default_factory=dict)

    def chat_ids(self) -> list[str]:
        return sorted(self.chats)

    def messages(self, chat_id: str, role: str | None = None) -> list[ChatMessage]:
        """Messages of one chat in time order, optionally filtered by role (a view)."""
        msgs = self.chats.get(chat_id, [])
        if role is None:
            return list(msgs)
        return [m for m in msgs if m.sender_role == role]

    def user_tag_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for _, tag in self.users:
            counts[tag] = counts.get(tag, 0) + 1
        return counts


def _read_rows(path: Path, table: str):
    expected = TABLE_COLUMNS[table]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return
        if header != expected:
            raise UnknownColumn(path.name, header)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise MalformedRow(path.name, line_no, f"expected {len(expected)} fields, got {len(row)}")
            yield line_no, row


def _load_chats_into(corpus: Corpus, path: Path) -> None:
    n = 0
    for line_no, (chat_id, msg_id, role, ts, body) in _read_rows(path, "chats"):
        try:
            timestamp = parse_iso8601(ts)
        except ValueError as e:
            raise MalformedRow(path.name, line_no, f"bad timestamp {ts!r}") from e
        if role not in SENDER_ROLES:
            raise MalformedRow(path.name, line_no, f"bad sender_role {role!r}")
        if not chat_id or not msg_id:
            raise MalformedRow(path.name, line_no, "chat_id and msg_id are required")
        corpus.chats.setdefault(chat_id, []).append(
            ChatMessage(chat_id, msg_id, role, body, timestamp))
        n += 1
    for msgs in corpus.chats.values():
        msgs.sort(key=lambda m: (m.timestamp, m.msg_id))
    corpus.row_counts["chats"] = n


def load_chats_csv(path: str | Path) -> Corpus:
    """Corpus holding just one chats-format CSV, whatever the file is called."""
    corpus = Corpus()
    _load_chats_into(corpus, Path(path))
    return corpus


def ingest_leak_tables(directory: str | Path) -> Corpus:
    """Load whichever leak tables exist under ``directory`` into one corpus."""
    directory = Path(directory)
    corpus = Corpus()

    path = directory / "chats.csv"
    if path.exists():
        _load_chats_into(corpus, path)

    path = directory / "users.csv"
    if path.exists():
        for _, (username, tag) in _read_rows(path, "users"):
            corpus.users.append((username, tag))
        corpus.row_counts["users"] = len(corpus.users)

    path = directory / "visits.csv"
    if path.exists():
        for line_no, (username, ts) in _read_rows(path, "visits"):
            try:
                corpus.visits.append((username, parse_iso8601(ts)))
            except ValueError as e:
                raise MalformedRow(path.name, line_no, f"bad timestamp {ts!r}") from e
        corpus.row_counts["visits"] = len(corpus.visits)

    for table, target in (("btc_addresses", corpus.btc_addresses), ("invites", corpus.invites)):
        path = directory / f"{table}.csv"
        if path.exists():
            for _, (address,) in _read_rows(path, table):
                target.append(address)
            corpus.row_counts[table] = len(target)

    return corpus


# ---------------------------------------------------------------------------
# address extraction


@dataclass(frozen=True)
class ExtractionResult:
    addresses: tuple[tuple[str, str], ...]  # (address, kind), first-occurrence order
    checksum_failures: int

    def __iter__(self):
        return iter(self.addresses)


def extract_btc_addresses(text: str) -> ExtractionResult:
    """Checksum-valid addresses found in free text, deduplicated in order.

    Candidates that match the address shape but fail their checksum are
    dropped and counted, never returned.
    """
    found: dict[str, str] = {}
    failures = 0
    spans = [(m.start(), m.group(), KIND_BECH32) for m in BECH32_CANDIDATE.finditer(text)]
    spans += [(m.start(), m.group(), KIND_BASE58) for m in BASE58_CANDIDATE.finditer(text)]
    claimed: set[int] = set()
    for start, candidate, kind in sorted(spans, key=lambda s: (s[0], -len(s[1]))):
        if start in claimed:
            continue
        claimed.update(range(start, start + len(candidate)))
        ok = (is_valid_bech32_address(candidate) if kind == KIND_BECH32
              else is_valid_base58_address(candidate))
        if not ok:
            failures += 1
        elif candidate not in found:
            found[candidate] = kind
    return ExtractionResult(tuple(found.items()), failures)


@dataclass(frozen=True)
class AddressReport:
    """Corpus-wide extraction with both deduplication scopes reported."""

    rows: tuple[tuple[str, str, str], ...]  # (address, kind, first_chat_id)
    detected: int                           # valid matches including repeats
    unique_global: int
    unique_per_chat_total: int
    checksum_failures: int


def extract_addresses_report(corpus: Corpus) -> AddressReport:
    rows: dict[str, tuple[str, str, str]] = {}
    detected = 0
    per_chat_unique = 0
    failures = 0
    for chat_id in corpus.chat_ids():
        seen_here: set[str] = set()
        for msg in corpus.messages(chat_id):
            result = extract_btc_addresses(msg.body)
            failures += result.checksum_failures
            for address, kind in result:
                detected += 1
                if address not in seen_here:
                    seen_here.add(address)
                    per_chat_unique += 1
                if address not in rows:
                    rows[address] = (address, kind, chat_id)
    return AddressReport(
        rows=tuple(rows.values()),
        detected=detected,
        unique_global=len(rows),
        unique_per_chat_total=per_chat_unique,
        checksum_failures=failures,
    )


# ---------------------------------------------------------------------------
# segmentation


def segment_interactions(messages, gap_seconds: int = DEFAULT_GAP_SECONDS) -> list[Interaction]:
    """Greedy left-to-right split wherever the gap strictly exceeds ``gap_seconds``."""
    if gap_seconds <= 0:
        raise CorpusError("gap_seconds must be positive")
    msgs = sorted(messages, key=lambda m: (m.timestamp, m.msg_id))
    if not msgs:
        return []
    chat_ids = {m.chat_id for m in msgs}
    if len(chat_ids) != 1:
        raise CorpusError(f"messages span multiple chats: {sorted(chat_ids)}")
    chat_id = msgs[0].chat_id
    groups: list[list[ChatMessage]] = [[msgs[0]]]
    for prev, cur in zip(msgs, msgs[1:]):
        if cur.timestamp - prev.timestamp > gap_seconds:
            groups.append([cur])
        else:
            groups[-1].append(cur)
    return [Interaction(chat_id, tuple(g)) for g in groups]


def segment_corpus(corpus: Corpus, gap_seconds: int = DEFAULT_GAP_SECONDS) -> list[Interaction]:
    out: list[Interaction] = []
    for chat_id in corpus.chat_ids():
        out.extend(segment_interactions(corpus.messages(chat_id), gap_seconds))
    return out
