"""Append-only hash-chained audit log.

Each entry hashes its predecessor: entry_hash = SHA-256(prev_hash || event)
with the event in canonical JSON and 32 zero bytes before the first entry.
Rewriting any historical event breaks that entry's hash (and every
subsequent prev_hash link), so tampering is evident from the file alone.

Appends are serialized through a single lock; the chain needs a total
order.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from attestrep.canonical import canonical_json_bytes, sha256

GENESIS_HASH = b"\x00" * 32


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    prev_hash: bytes
    event: dict
    entry_hash: bytes

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "prev_hash": self.prev_hash.hex(),
            "event": self.event,
            "entry_hash": self.entry_hash.hex(),
        }


@dataclass(frozen=True)
class AuditCheck:
    ok: bool
    broken_at: int | None = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "broken_at": self.broken_at}


def _entry_hash(prev_hash: bytes, event: dict) -> bytes:
    return sha256(prev_hash + canonical_json_bytes(event))


class AuditLog:
    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_seq = 0
        self._last_hash = GENESIS_HASH
        if self.path.exists():
            tail = None
            for tail in self.entries():
                pass
            if tail is not None:
                self._next_seq = tail.seq + 1
                self._last_hash = tail.entry_hash

    def append(self, event: dict) -> AuditEntry:
        with self._lock:
            entry = AuditEntry(
                seq=self._next_seq,
                prev_hash=self._last_hash,
                event=event,
                entry_hash=_entry_hash(self._last_hash, event),
            )
            line = canonical_json_bytes(entry.to_dict()) + b"\n"
            with self.path.open("ab") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            self._next_seq = entry.seq + 1
            self._last_hash = entry.entry_hash
            return entry

    def entries(self, from_seq: int = 0) -> list[AuditEntry]:
        if not self.path.exists():
            return []
        out: list[AuditEntry] = []
        with self.path.open("rb") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                obj = json.loads(raw.decode("utf-8"))
                entry = AuditEntry(
                    seq=obj["seq"],
                    prev_hash=bytes.fromhex(obj["prev_hash"]),
                    event=obj["event"],
                    entry_hash=bytes.fromhex(obj["entry_hash"]),
                )
                if entry.seq >= from_seq:
                    out.append(entry)
        return out


def audit_check(log: AuditLog | str | Path) -> AuditCheck:
    """Recompute the whole chain; report the first broken sequence number.

    An empty log is vacuously intact. Unparseable lines count as broken at
    their position.
    """
    path = log.path if isinstance(log, AuditLog) else Path(log)
    if not path.exists():
        return AuditCheck(ok=True)
    prev_hash = GENESIS_HASH
    seq = 0
    with path.open("rb") as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw.decode("utf-8"))
                stored_prev = bytes.fromhex(obj["prev_hash"])
                stored_hash = bytes.fromhex(obj["entry_hash"])
                event = obj["event"]
                stored_seq = obj["seq"]
            except (ValueError, KeyError, TypeError):
                return AuditCheck(ok=False, broken_at=seq)
            if stored_seq != seq or stored_prev != prev_hash:
                return AuditCheck(ok=False, broken_at=seq)
            if _entry_hash(prev_hash, event) != stored_hash:
                return AuditCheck(ok=False, broken_at=seq)
            prev_hash = stored_hash
            seq += 1
    return AuditCheck(ok=True)
