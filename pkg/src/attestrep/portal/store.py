"""Flat-file content-addressed blob store.

Keys are the SHA-256 of the stored bytes, so any silent mutation of a blob
is detectable on read. Writes go through a temp file and rename, so a
half-written blob never sits at its final path.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path


class BlobMissing(KeyError):
    def __init__(self, key: str) -> None:
        super().__init__(key)
        self.key = key


class BlobCorrupt(Exception):
    """Stored bytes no longer hash to their key."""

    def __init__(self, key: str, actual: str) -> None:
        super().__init__(f"blob {key} reads back as {actual}")
        self.key = key
        self.actual = actual


class BlobStore:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, key: str) -> Path:
        return self.root / key

    def put(self, data: bytes) -> str:
        key = hashlib.sha256(data).hexdigest()
        final = self.path(key)
        if final.exists():
            return key
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, final)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return key

    def get(self, key: str) -> bytes:
        """Read and re-verify a blob; corruption is surfaced, never served."""
        data = self.get_unverified(key)
        actual = hashlib.sha256(data).hexdigest()
        if actual != key:
            raise BlobCorrupt(key, actual)
        return data

    def get_unverified(self, key: str) -> bytes:
        """Raw bytes at the key, without the content-address check."""
        try:
            return self.path(key).read_bytes()
        except FileNotFoundError:
            raise BlobMissing(key) from None

    def exists(self, key: str) -> bool:
        return self.path(key).is_file()
