"""Tracker signature lists: names plus hostname or class-prefix patterns.

The list is plain configuration, not ground truth; ship a small default and
let deployments edit it. File format is CSV lines `name,kind,pattern` with
`#` comments.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from ..errors import InvalidManifest


@dataclass(frozen=True)
class Signature:
    name: str
    kind: str  # "hostname" | "class-prefix"
    pattern: str


@dataclass(frozen=True)
class SignatureList:
    name: str
    entries: tuple[Signature, ...]


@dataclass(frozen=True)
class DetectionHit:
    tracker: str
    pattern: str
    dex_path: str
    string_index: int

    def as_dict(self) -> dict:
        return {
            "tracker": self.tracker,
            "pattern": self.pattern,
            "dex": self.dex_path,
            "string_index": self.string_index,
        }


def parse_signature_list(text: str, name: str = "default") -> SignatureList:
    entries = []
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if not row or (row[0].strip().startswith("#")):
            continue
        if len(row) != 3:
            raise InvalidManifest(f"signature list line {lineno}: expected name,kind,pattern")
        sig_name, kind, pattern = (c.strip() for c in row)
        if kind not in ("hostname", "class-prefix"):
            raise InvalidManifest(f"signature list line {lineno}: unknown kind {kind!r}")
        if not sig_name or not pattern:
            raise InvalidManifest(f"signature list line {lineno}: empty name or pattern")
        entries.append(Signature(name=sig_name, kind=kind, pattern=pattern))
    return SignatureList(name=name, entries=tuple(entries))


def load_signature_list(path, name: str = "default") -> SignatureList:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_signature_list(fh.read(), name=name)
