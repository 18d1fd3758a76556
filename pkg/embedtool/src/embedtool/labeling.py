"""Optional cluster labeling through a chat-completion endpoint.

Configuration comes from the same environment variables the analysis toolkit
documents (``PLAYBOOK_LLM_URL``, ``PLAYBOOK_LLM_KEY``); replies must be a 3-6
word behavioral description, with one retry before a cluster is flagged for
manual review.
"""

from __future__ import annotations

import json
import os

import requests

ENV_SERVICE_URL = "PLAYBOOK_LLM_URL"
ENV_SERVICE_KEY = "PLAYBOOK_LLM_KEY"

LABEL_PROMPT = (
    "Given the following list of short sentences, return one concise behavioral "
    "description for the group (3-6 words). Focus on the underlying intent or "
    "action (e.g., greeting, negotiating, threatening, sharing files). "
    "Return only the description"
)


class ServiceUnreachable(RuntimeError):
    pass


class MalformedServiceReply(RuntimeError):
    pass


def _word_count_ok(label: str) -> bool:
    return 3 <= len(label.split()) <= 6


class LabelClient:
    def __init__(self, url: str | None = None, key: str | None = None,
                 model: str = "gpt-4o-mini", timeout: float = 30.0):
        self.url = url or os.environ.get(ENV_SERVICE_URL)
        self.key = key or os.environ.get(ENV_SERVICE_KEY)
        self.model = model
        self.timeout = timeout
        if not self.url:
            raise ServiceUnreachable(f"{ENV_SERVICE_URL} is not configured")

    def describe(self, messages: list[str]) -> str:
        content = LABEL_PROMPT + "\n\n" + "\n".join(f"- {m}" for m in messages)
        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        try:
            resp = requests.post(
                self.url,
                json={"model": self.model,
                      "messages": [{"role": "user", "content": content}]},
                headers=headers, timeout=self.timeout)
        except requests.RequestException as e:
            raise ServiceUnreachable(str(e)) from e
        if resp.status_code != 200:
            raise MalformedServiceReply(f"service returned HTTP {resp.status_code}")
        try:
            reply = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise MalformedServiceReply(f"unexpected reply shape: {e}") from e
        if not isinstance(reply, str) or not reply.strip():
            raise MalformedServiceReply("empty label text")
        return " ".join(reply.split())


def label_clusters(clusters: dict[int, list[str]], client: LabelClient) -> list[dict]:
    """One label dict per cluster id, ready to serialize as labels.json."""
    out = []
    for cid in sorted(clusters):
        label = client.describe(clusters[cid])
        review = False
        if not _word_count_ok(label):
            label = client.describe(clusters[cid])
            review = not _word_count_ok(label)
        out.append({"cluster_id": cid, "label": label, "needs_review": review})
    return out


def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(labels, fh, indent=2, sort_keys=True)
        fh.write("\n")
