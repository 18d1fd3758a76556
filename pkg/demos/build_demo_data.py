#!/usr/bin/env python3
"""Regenerate the committed demo datasets under demos/data/ and tests/data/.

Everything is deterministic, so rerunning this script reproduces the files
byte for byte.  Three datasets come out of it:

* demos/data/playbook/   -- interaction/assignment/label files shaped so the
  top-15% transition filter keeps a nine-node core (a ring of nine behavioral
  themes planted above sixty total edges).
* demos/data/leak/       -- a tiny synthetic negotiation-panel dump (chats,
  users, visits, address tables) that drives the chat pipeline end to end.
* tests/data/embeddings_16x4.jsonl -- sixteen unit-norm 4-d message vectors in
  four tight groups, one per planted conversation theme, keyed to the demo
  chat message ids.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ransomtrace.addresses import p2pkh_address, p2wpkh_address

ROOT = Path(__file__).resolve().parent
PLAYBOOK_DIR = ROOT / "data" / "playbook"
LEAK_DIR = ROOT / "data" / "leak"
TESTS_DATA = ROOT.parent / "tests" / "data"

RING = [
    ("introducing demands and stakes", "InitEnd"),
    ("negotiating ransom price", "Ransom"),
    ("requesting payment transfer", "Ransom"),
    ("explaining payment deadline", "InfoThreat"),
    ("offering trial file decryption", "Decryption"),
    ("confirming payment received", "Ransom"),
    ("delivering decryptor package", "Decryption"),
    ("explaining decryptor usage steps", "Decryption"),
    ("threatening data publication", "InfoThreat"),
]
EXTRA = [
    ("sharing support contact details", "InfoThreat"),
    ("handling technical issue reports", "InfoThreat"),
    ("closing conversation politely", "InitEnd"),
]


def build_playbook_fixture() -> None:
    """Pairs of messages, one interaction per transition occurrence.

    Ring transitions are planted nine times each; every other edge once.
    60 edges total, so ceil(0.15 * 60) = 9 kept edges = the ring.
    """
    names = [n for n, _ in RING + EXTRA]
    pairs: list[tuple[str, str]] = []
    for i in range(9):
        pairs.extend([(names[i], names[(i + 1) % 9])] * 9)   # hot ring edges
        pairs.append((names[i], names[9]))                   # two cool fillers
        pairs.append((names[i], names[10]))
    for x in (9, 10, 11):
        for other in range(12):
            if other != x:
                pairs.append((names[x], names[other]))       # eleven cool edges

    PLAYBOOK_DIR.mkdir(parents=True, exist_ok=True)
    interactions, assignments = [], []
    label_index = {name: cid for cid, name in enumerate(names)}
    t, n = 1_750_000_000, 0
    for src, dst in pairs:
        msgs = []
        for name in (src, dst):
            mid = f"pb{n:05d}"
            n += 1
            msgs.append({"msg_id": mid, "sender_role": "attacker", "timestamp": t})
            assignments.append({"cluster": label_index[name], "msg_id": mid})
            t += 60
        interactions.append({
            "chat_id": "demo",
            "start": msgs[0]["timestamp"],
            "end": msgs[-1]["timestamp"],
            "messages": msgs,
        })
        t += 4 * 3600  # keep interactions apart

    with (PLAYBOOK_DIR / "interactions.jsonl").open("w", encoding="utf-8") as fh:
        for obj in interactions:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    with (PLAYBOOK_DIR / "assignments.jsonl").open("w", encoding="utf-8") as fh:
        for obj in assignments:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    labels = [{"cluster_id": cid, "label": name, "category": cat,
               "excluded": False, "needs_review": False}
              for cid, (name, cat) in enumerate(RING + EXTRA)]
    (PLAYBOOK_DIR / "labels.json").write_text(
        json.dumps(labels, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# Four planted conversation themes, four attacker turns each.
THEMES = {
    "demand": [
        "Hello. Your network is encrypted and your files are in our hands.",
        "We demand 3 BTC for full recovery of your infrastructure.",
        "This is not a negotiation opener, it is the starting price.",
        "Your insurance contract covers far more than we ask.",
    ],
    "negotiation": [
        "The sooner you close the deal, the better the price stays.",
        "We can offer a small discount for payment inside 48 hours.",
        "Yes, the amount in Bitcoin indicated above is final.",
        "Monero payments receive an additional twenty percent discount.",
    ],
    "payment": [
        "Send the agreed amount to the wallet indicated in this chat.",
        "Payment address: {ADDR1} confirm after sending.",
        "We watch the mempool, do not try to split the payment.",
        "Funds received. The accounting team will confirm shortly.",
    ],
    "decryption": [
        "You can attach a few files for test decryption in the chat.",
        "Here download link http://paneldemo1example.onion/d/tool",
        "Run the decryptor as administrator on every encrypted host.",
        "Waiting for the decryptor from the tech team, stay online.",
    ],
}


def build_leak_fixture() -> None:
    LEAK_DIR.mkdir(parents=True, exist_ok=True)
    collector = "bc1q9wvygkq7h9xgcp59mc6ghzczrqlgrj9k3ey9tz"
    pay_addr = p2pkh_address(b"\x51" * 20)
    corrupted = collector[:-1] + ("2" if collector[-1] != "2" else "3")

    chats_rows = []
    msg_ids = {}
    base = 1_751_000_000
    for c, theme in enumerate(THEMES):
        chat_id = f"chat{c + 1}"
        t = base + c * 86_400
        for i, body in enumerate(THEMES[theme]):
            body = body.replace("{ADDR1}", pay_addr)
            mid = f"c{c + 1}a{i}"
            msg_ids.setdefault(theme, []).append(mid)
            chats_rows.append((chat_id, mid, "attacker", _iso(t), body))
            t += 1800
            chats_rows.append((chat_id, f"c{c + 1}v{i}", "victim", _iso(t),
                               "We are reviewing this internally."))
            if i == 1:
                t += 4 * 3600  # force a second interaction inside each chat
            else:
                t += 900
        # one system line carrying addresses for the extraction demo
        chats_rows.append((chat_id, f"c{c + 1}s", "system", _iso(t),
                           f"panel note {collector} backup {corrupted}"))

    with (LEAK_DIR / "chats.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chat_id", "msg_id", "sender_role", "timestamp_iso8601", "body"])
        w.writerows(chats_rows)

    users = ([(f"verified{i}", "Verified") for i in range(5)]
             + [("scamtest", "Scammer")]
             + [(f"pen{i}", "pentester") for i in range(4)]
             + [(f"newbie{i}", "newbie") for i in range(3)])
    with (LEAK_DIR / "users.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["username", "tag"])
        w.writerows(users)

    with (LEAK_DIR / "visits.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["username", "timestamp_iso8601"])
        for i, (username, _) in enumerate(users):
            for day in range(1 + i % 3):
                w.writerow([username, _iso(base + day * 86_400 + i * 3600)])

    with (LEAK_DIR / "btc_addresses.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["address"])
        for i in range(10):
            w.writerow([p2wpkh_address(bytes([0x60 + i]) * 20)])

    with (LEAK_DIR / "invites.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["address"])
        for i in range(3):
            w.writerow([p2pkh_address(bytes([0x70 + i]) * 20)])

    build_embeddings(msg_ids)


def build_embeddings(msg_ids: dict[str, list[str]]) -> None:
    """Sixteen unit-norm 4-d vectors, one tight group per theme."""
    TESTS_DATA.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20_250_531)
    with (TESTS_DATA / "embeddings_16x4.jsonl").open("w", encoding="utf-8") as fh:
        for axis, theme in enumerate(THEMES):
            for mid in msg_ids[theme]:
                vec = rng.normal(scale=0.04, size=4)
                vec[axis] += 1.0
                vec /= np.sqrt(np.sum(vec * vec))
                fh.write(json.dumps(
                    {"msg_id": mid, "vec": [float(v) for v in vec]},
                    separators=(",", ":")) + "\n")


def _iso(ts: int) -> str:
    from datetime import datetime, timezone

    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


if __name__ == "__main__":
    build_playbook_fixture()
    build_leak_fixture()
    print(f"wrote {PLAYBOOK_DIR}")
    print(f"wrote {LEAK_DIR}")
    print(f"wrote {TESTS_DATA / 'embeddings_16x4.jsonl'}")
