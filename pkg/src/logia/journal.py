"""Append-only NDJSON journal.

Every accepted write is journaled before it is applied or acknowledged, so
replaying the journal from the top reconstructs the exact engine state. The
file is the system of record; everything else is a cache of it.
"""

from __future__ import annotations

import json
import os
from typing import Iterator, Optional


class JournalCorruptError(Exception):
    def __init__(self, path: str, line_number: int, byte_offset: int, reason: str):
        self.path = path
        self.line_number = line_number
        self.byte_offset = byte_offset
        self.reason = reason
        super().__init__(
            f"journal {path} corrupt at line {line_number} "
            f"(byte offset {byte_offset}): {reason}"
        )


def read_entries(path: str) -> Iterator[dict]:
    """Yield journal entries in order, refusing to skip damage.

    A truncated or mangled line raises JournalCorruptError with the byte
    offset of the offending line so the operator can inspect and repair.
    """
    offset = 0
    line_number = 0
    expected_seq = 1
    with open(path, "rb") as handle:
        for raw_line in handle:
            line_number += 1
            line_offset = offset
            offset += len(raw_line)
            stripped = raw_line.strip()
            if not stripped:
                if raw_line.endswith(b"\n"):
                    continue
                raise JournalCorruptError(path, line_number, line_offset,
                                          "truncated trailing line")
            try:
                entry = json.loads(stripped.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise JournalCorruptError(path, line_number, line_offset,
                                          f"unparseable entry: {exc}") from None
            if not isinstance(entry, dict):
                raise JournalCorruptError(path, line_number, line_offset,
                                          "entry is not an object")
            seq = entry.get("seq")
            if seq != expected_seq:
                raise JournalCorruptError(
                    path, line_number, line_offset,
                    f"sequence gap: expected {expected_seq}, found {seq!r}")
            if not raw_line.endswith(b"\n"):
                raise JournalCorruptError(path, line_number, line_offset,
                                          "entry missing trailing newline")
            expected_seq += 1
            yield entry


class Journal:
    """Writer half. Entries gain a monotonically increasing seq number."""

    def __init__(self, path: str, fsync: bool = True):
        self.path = path
        self.fsync = fsync
        self.seq = 0
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        self._handle = open(path, "ab")

    def resume_at(self, seq: int) -> None:
        self.seq = seq

    def append(self, entry: dict) -> int:
        self.seq += 1
        body = dict(entry)
        body["seq"] = self.seq
        line = json.dumps(body, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False)
        self._handle.write(line.encode("utf-8") + b"\n")
        self._handle.flush()
        if self.fsync:
            os.fsync(self._handle.fileno())
        return self.seq

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.flush()
            self._handle.close()

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_journal(path: str, fsync: bool = True) -> tuple[Journal, list[dict]]:
    """Open for append, first replaying whatever is already on disk.

    Corruption raises before any write handle is opened, so a damaged journal
    is never appended to.
    """
    entries: list[dict] = []
    if os.path.exists(path):
        entries = list(read_entries(path))
    journal = Journal(path, fsync=fsync)
    if entries:
        journal.resume_at(entries[-1]["seq"])
    return journal, entries
