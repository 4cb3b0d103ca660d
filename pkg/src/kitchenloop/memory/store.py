"""Critique memory: an append-only store plus lesson summarization.

Critiques (from the automated critic or a human) accumulate per run; the
summarizer compresses them into at most ``N_MEM`` lesson strings which get
injected into planner prompts. Persistence is atomic (write to a temporary
file, then rename) so a reader never observes a torn document.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from ..canonical import canonical_dumps

SCHEMA_VERSION = 1
N_MEM = 10  # lesson budget injected into prompts

AUTHORS = ("critic", "human")


class MemoryError(Exception):
    pass


@dataclass(frozen=True)
class CritiqueRecord:
    id: str
    episode_id: str
    step_index: int
    author: str
    text: str
    timestamp: int

    def __post_init__(self):
        if not self.id:
            raise MemoryError("critique id must be non-empty")
        if self.author not in AUTHORS:
            raise MemoryError(f"unknown critique author {self.author!r}")
        if not self.text:
            raise MemoryError("critique text must be non-empty")

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "episode_id": self.episode_id,
            "step_index": self.step_index,
            "author": self.author,
            "text": self.text,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "CritiqueRecord":
        return cls(
            id=doc["id"],
            episode_id=doc["episode_id"],
            step_index=int(doc["step_index"]),
            author=doc["author"],
            text=doc["text"],
            timestamp=int(doc["timestamp"]),
        )


@dataclass(frozen=True)
class MemorySummary:
    """Lessons (newest critique first) with the critique ids behind each."""

    lessons: tuple[str, ...] = ()
    provenance: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        if len(self.lessons) != len(self.provenance):
            raise MemoryError("each lesson needs a provenance entry")
        for ids in self.provenance:
            if not ids:
                raise MemoryError("every lesson must cite at least one critique")

    def to_doc(self) -> dict:
        return {
            "lessons": list(self.lessons),
            "provenance": [list(ids) for ids in self.provenance],
        }


class CritiqueStore:
    """Append-only critique records, unique by id."""

    def __init__(self, records: list[CritiqueRecord] | None = None):
        self._records: list[CritiqueRecord] = []
        self._ids: set[str] = set()
        for rec in records or []:
            self.record(rec)

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> tuple[CritiqueRecord, ...]:
        return tuple(self._records)

    def record(self, rec: CritiqueRecord) -> None:
        if rec.id in self._ids:
            raise MemoryError(f"duplicate critique id {rec.id!r}")
        self._records.append(rec)
        self._ids.add(rec.id)

    def to_doc(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "records": [r.to_doc() for r in self._records],
        }

    def persist(self, path) -> None:
        _atomic_write(path, self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict) -> "CritiqueStore":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise MemoryError(f"unsupported store schema {doc.get('schema_version')!r}")
        return cls([CritiqueRecord.from_doc(d) for d in doc["records"]])


def summarize_memory(store: CritiqueStore, summarizer=None) -> MemorySummary:
    """Compress the store into at most N_MEM lessons.

    The default summarizer is deterministic: exact-duplicate texts merge
    into one lesson citing every duplicate, lessons are ordered newest
    first, and the list truncates at N_MEM. A callable summarizer may
    replace it; if it raises, the scripted path runs instead and the
    failure is noted on the returned summary's provenance (unchanged) —
    callers that care about the fallback can log it.
    """
    if summarizer is not None:
        try:
            return summarizer(store)
        except Exception:
            pass  # fall through to the scripted summarizer
    by_text: dict[str, list[str]] = {}
    last_seen: dict[str, int] = {}
    for pos, rec in enumerate(store.records()):
        by_text.setdefault(rec.text, []).append(rec.id)
        last_seen[rec.text] = pos
    ordered = sorted(by_text, key=lambda t: last_seen[t], reverse=True)[:N_MEM]
    return MemorySummary(
        lessons=tuple(ordered),
        provenance=tuple(tuple(by_text[t]) for t in ordered),
    )


def _atomic_write(path, doc: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = canonical_dumps(doc)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_doc(path) -> dict:
    raw = Path(path).read_bytes()
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        # exc.pos is a character offset; the documents are ASCII so it is
        # also the byte offset.
        raise MemoryError(f"corrupt file {path}: invalid JSON at byte {exc.pos}") from exc


def load_store(path) -> CritiqueStore:
    return CritiqueStore.from_doc(_load_doc(path))
