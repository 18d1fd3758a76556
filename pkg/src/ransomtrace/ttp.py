"""ATT&CK technique-set comparison with shipped reference lists.

The package carries the technique inventories attributed to the two malware
generations as static data; ``ttp_diff`` partitions any two id sets exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

TECHNIQUE_ID_RE = re.compile(r"^T\d{4}(\.\d{3})?$")


class InvalidTechniqueId(ValueError):
    def __init__(self, value: str):
        super().__init__(f"not an ATT&CK technique id: {value!r}")


@dataclass(frozen=True)
class TtpDiff:
    both: tuple[str, ...]
    only_a: tuple[str, ...]
    only_b: tuple[str, ...]


def _validate(ids) -> set[str]:
    out = set()
    for value in ids:
        value = value.strip()
        if not TECHNIQUE_ID_RE.match(value):
            raise InvalidTechniqueId(value)
        out.add(value)
    return out


def ttp_diff(set_a, set_b) -> TtpDiff:
    """Exact partition of two technique-id sets, each side sorted by id."""
    a, b = _validate(set_a), _validate(set_b)
    return TtpDiff(
        both=tuple(sorted(a & b)),
        only_a=tuple(sorted(a - b)),
        only_b=tuple(sorted(b - a)),
    )


def _load_list(name: str) -> dict[str, str]:
    text = resources.files("ransomtrace.data").joinpath(name).read_text("utf-8")
    table = {}
    for line in text.splitlines():
        if line.strip():
            tid, tname = line.split("\t")
            table[tid] = tname
    return table


def lockbit20_techniques() -> dict[str, str]:
    return _load_list("ttp_lockbit20.tsv")


def lockbit30_techniques() -> dict[str, str]:
    return _load_list("ttp_lockbit30.tsv")


def load_technique_file(path) -> list[str]:
    """Read ids from a text file: first whitespace-separated token per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(line.split()[0])
    return out
