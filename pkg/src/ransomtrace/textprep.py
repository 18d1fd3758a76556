"""Message normalization into token sequences ready for embedding.

Cleanup order: lowercase, URL/onion-link removal, user-mention removal,
punctuation stripping, whitespace tokenization, stopword removal,
lemmatization.  Lemmatization is a small deterministic suffix cascade plus a
shipped irregular-form table; it is applied to a fixed point, so normalizing
already-normalized text changes nothing.

Tokens that start with a digit are dropped.  Tokens containing non-ASCII
letters (Cyrillic and friends) pass through with lowercase/cleanup only, and
their share is reported so non-English messages can be filtered downstream.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

URL_RE = re.compile(r"(?:https?://\S+|www\.\S+|\S+\.onion\S*)", re.IGNORECASE)
MENTION_RE = re.compile(r"@\w+")
NON_WORD_RE = re.compile(r"[^\w]|_")

_VOWELS = "aeiou"


def _load_default_stopwords() -> frozenset[str]:
    text = resources.files("ransomtrace.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def _load_default_lemmas() -> dict[str, str]:
    text = resources.files("ransomtrace.data").joinpath("lemma_irregulars.tsv").read_text("utf-8")
    table = {}
    for line in text.splitlines():
        if line.strip():
            form, lemma = line.split("\t")
            table[form] = lemma
    return table


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip() for w in fh if w.strip())


def load_lemma_table(path) -> dict[str, str]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                form, lemma = line.rstrip("\n").split("\t")
                table[form] = lemma
    return table


@dataclass(frozen=True)
class TextPrepConfig:
    stopwords: frozenset[str]
    lemma_table: dict[str, str]

    @classmethod
    def default(cls) -> "TextPrepConfig":
        return cls(_load_default_stopwords(), _load_default_lemmas())


_DEFAULT: TextPrepConfig | None = None


def default_config() -> TextPrepConfig:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = TextPrepConfig.default()
    return _DEFAULT


@dataclass(frozen=True)
class TokenSeq:
    msg_id: str
    tokens: tuple[str, ...]
    non_ascii_ratio: float = 0.0


def _suffix_pass(token: str) -> str:
    """One application of the suffix rules; plural first, then -ed forms."""
    n = len(token)
    if token.endswith("sses"):
        return token[:-2]
    if token.endswith("ies") and n >= 5:
        return token[:-3] + "y"
    if n >= 4 and token.endswith(("xes", "ches", "shes", "zes")):
        return token[:-2]
    if n >= 4 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    if token.endswith("ied") and n >= 5:
        return token[:-3] + "y"
    if token.endswith("ed") and not token.endswith("eed") and n >= 5:
        stem = token[:-2]
        if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
            return stem[:-1]
        return stem
    return token


def lemmatize(token: str, table: dict[str, str]) -> str:
    """Irregular-table lookup, then suffix rules, iterated to a fixed point."""
    seen = {token}
    while True:
        nxt = table.get(token)
        if nxt is None:
            nxt = _suffix_pass(token)
        if nxt == token:
            return token
        if nxt in seen:  # defensive: a cyclic override table must not hang
            return nxt
        seen.add(nxt)
        token = nxt


def normalize(text: str, config: TextPrepConfig | None = None, msg_id: str = "") -> TokenSeq:
    cfg = config or default_config()
    cleaned = text.lower()
    cleaned = URL_RE.sub(" ", cleaned)
    cleaned = MENTION_RE.sub(" ", cleaned)
    cleaned = NON_WORD_RE.sub(" ", cleaned)

    out: list[str] = []
    non_ascii = 0
    for raw in cleaned.split():
        if not raw.isascii():
            non_ascii += 1
            out.append(raw)
            continue
        if raw[0].isdigit():
            continue
        if raw in cfg.stopwords:
            continue
        lemma = lemmatize(raw, cfg.lemma_table)
        if lemma in cfg.stopwords:
            continue
        out.append(lemma)
    ratio = non_ascii / len(out) if out else 0.0
    return TokenSeq(msg_id=msg_id, tokens=tuple(out), non_ascii_ratio=ratio)


# ---------------------------------------------------------------------------
# line-delimited token records


def write_token_records(seqs, fh) -> int:
    n = 0
    for seq in seqs:
        fh.write(json.dumps({"msg_id": seq.msg_id, "tokens": list(seq.tokens)},
                            separators=(",", ":")) + "\n")
        n += 1
    return n


def read_token_records(fh) -> list[TokenSeq]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(TokenSeq(msg_id=str(obj["msg_id"]), tokens=tuple(obj["tokens"])))
    return out
