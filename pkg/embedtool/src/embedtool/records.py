"""Line-delimited record I/O shared with the analysis toolkit.

Input records carry ``msg_id`` plus either raw ``text`` or preprocessed
``tokens``; output records are ``{"msg_id": ..., "vec": [...]}`` exactly as
the analysis side's embedding reader expects.  Output files are written
atomically (temp file, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path


class EmptyInput(ValueError):
    pass


class BadRecord(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")


def read_message_records(path: str | Path, field: str = "auto") -> list[tuple[str, str]]:
    """Return (msg_id, text) pairs; ``field`` picks tokens/text or auto-prefers tokens."""
    out: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise BadRecord(line_no, f"invalid JSON: {e.msg}") from e
            if "msg_id" not in obj:
                raise BadRecord(line_no, "missing msg_id")
            text = None
            if field in ("auto", "tokens") and isinstance(obj.get("tokens"), list):
                text = " ".join(str(t) for t in obj["tokens"])
            if text is None and field in ("auto", "text") and "text" in obj:
                text = str(obj["text"])
            if text is None:
                raise BadRecord(line_no, f"no usable {field!r} field")
            out.append((str(obj["msg_id"]), text))
    if not out:
        raise EmptyInput(f"no records in {path}")
    return out


def write_embedding_records(path: str | Path, ids, vectors) -> int:
    """Write embedding lines atomically; returns the record count."""
    path = Path(path)
    rows = list(zip(ids, vectors))
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."),
                                    prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for msg_id, vec in rows:
                fh.write(json.dumps({"msg_id": msg_id,
                                     "vec": [float(v) for v in vec]},
                                    separators=(",", ":")) + "\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return len(rows)


def read_cluster_assignments(path: str | Path) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out[str(obj["msg_id"])] = int(obj["cluster"])
    return out
