"""Canonical JSON serialization shared by quotes, bundles, and the audit log.

One encoding rule for everything that gets hashed or signed: UTF-8 JSON,
object keys sorted ascending by byte order, no insignificant whitespace,
integers in decimal, binary fields as lowercase hex strings. Anything that
recomputes a hash must go through this module.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json_bytes(obj: Any) -> bytes:
    """Serialize ``obj`` to canonical JSON bytes.

    Keys in our schemas are ASCII, for which code-point order (what
    ``sort_keys`` uses) coincides with UTF-8 byte order. NaN/Infinity are
    rejected: they have no JSON form and would break round-trips.
    """
    return json.dumps(
        obj,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    ).encode("utf-8")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def from_hex(value: str, expected_len: int | None = None, field: str = "value") -> bytes:
    """Decode a lowercase-hex field, enforcing an exact byte length if given."""
    if not isinstance(value, str) or value != value.lower():
        raise ValueError(f"{field}: not a lowercase hex string")
    try:
        raw = bytes.fromhex(value)
    except ValueError as exc:
        raise ValueError(f"{field}: invalid hex: {exc}") from exc
    if expected_len is not None and len(raw) != expected_len:
        raise ValueError(f"{field}: expected {expected_len} bytes, got {len(raw)}")
    return raw
