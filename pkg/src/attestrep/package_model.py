"""Canonical digesting and manifest parsing for replication packages.

The digest fixes what "the submitted code" means: a platform-independent
hash over relative paths and file contents, so the same tree produces the
same 32 bytes everywhere. Scheme: enumerate regular files, sort UTF-8
relative paths by byte order, hash each file as

    leaf = SHA-256(0x00 || path || 0x00 || SHA-256(content))

and combine as SHA-256(0x01 || leaf_1 || ... || leaf_n). The 0x00/0x01
prefixes domain-separate leaves from the root. Directory entries, empty
directories, and permission bits are excluded; they vary across operating
systems and archive tools. Symlinks are refused outright.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

MANIFEST_NAME = "attestrep.manifest"

_CHUNK = 1 << 20


class PackageError(Exception):
    """Base class for package digesting and manifest failures."""


class NotADirectory(PackageError):
    def __init__(self, path: str) -> None:
        super().__init__(f"not a readable directory: {path}")
        self.path = path


class SymlinkEncountered(PackageError):
    """A symlink was found in the tree; refused rather than silently followed."""

    def __init__(self, path: str) -> None:
        super().__init__(f"symlink encountered: {path}")
        self.path = path


class UnreadableFile(PackageError):
    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"unreadable file {path}: {reason}")
        self.path = path
        self.reason = reason


class ManifestMissing(PackageError):
    def __init__(self, root: str) -> None:
        super().__init__(f"no {MANIFEST_NAME} in {root}")
        self.root = root


class ManifestParseError(PackageError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"manifest line {line}: {reason}")
        self.line = line
        self.reason = reason


class PathRuleViolation(PackageError):
    def __init__(self, field_name: str, path: str) -> None:
        super().__init__(f"{field_name}: illegal path {path!r}")
        self.field = field_name
        self.path = path


@dataclass(frozen=True)
class PackageDigest:
    """Canonical content digest of a package file tree."""

    value: bytes
    file_count: int
    total_bytes: int

    def __post_init__(self) -> None:
        if len(self.value) != 32:
            raise ValueError("digest value must be 32 bytes")
        if self.file_count < 0 or self.total_bytes < 0:
            raise ValueError("counts must be non-negative")

    @property
    def hex(self) -> str:
        return self.value.hex()


@dataclass(frozen=True)
class PackageManifest:
    """Parsed ``attestrep.manifest``: what to run and what it should produce."""

    entrypoint: str
    declared_outputs: tuple[str, ...] = ()
    env_spec: tuple[tuple[str, str], ...] = ()
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        validate_relative_path(self.entrypoint, "entrypoint")
        for out in self.declared_outputs:
            validate_relative_path(out, "output")


def validate_relative_path(path: str, field_name: str) -> None:
    """Enforce the package path rules.

    Relative, forward-slash separators, no ``.``/``..`` segments, no
    leading slash, no backslash, no empty segments, no NUL. Rejecting
    ``.`` keeps every file addressable by exactly one path.
    """
    if not path or path.startswith("/") or "\\" in path or "\x00" in path:
        raise PathRuleViolation(field_name, path)
    segments = path.rstrip("/").split("/")
    if any(seg in ("", ".", "..") for seg in segments):
        raise PathRuleViolation(field_name, path)


def _iter_regular_files(root: Path) -> list[str]:
    """Relative forward-slash paths of every regular file under ``root``.

    Raises on anything that is not a regular file or directory.
    """
    rels: list[str] = []
    stack = [root]
    while stack:
        current = stack.pop()
        try:
            entries = list(os.scandir(current))
        except OSError as exc:
            raise UnreadableFile(str(current), str(exc)) from exc
        for entry in entries:
            if entry.is_symlink():
                raise SymlinkEncountered(entry.path)
            if entry.is_dir(follow_symlinks=False):
                stack.append(Path(entry.path))
            elif entry.is_file(follow_symlinks=False):
                rels.append(os.path.relpath(entry.path, root).replace(os.sep, "/"))
            else:
                raise UnreadableFile(entry.path, "not a regular file or directory")
    return rels


def _file_sha256(path: Path) -> tuple[bytes, int]:
    hasher = hashlib.sha256()
    size = 0
    try:
        with path.open("rb") as fh:
            while chunk := fh.read(_CHUNK):
                hasher.update(chunk)
                size += len(chunk)
    except OSError as exc:
        raise UnreadableFile(str(path), str(exc)) from exc
    return hasher.digest(), size


def digest_package(root: str | Path) -> PackageDigest:
    """Compute the canonical digest of the file tree under ``root``.

    Deterministic across platforms and enumeration orders; sensitive to any
    change in any file path or content byte. Contents must not change while
    this runs.
    """
    root = Path(root)
    if not root.is_dir() or root.is_symlink():
        raise NotADirectory(str(root))
    rel_paths = sorted(_iter_regular_files(root), key=lambda rel: rel.encode("utf-8"))
    top = hashlib.sha256(b"\x01")
    total_bytes = 0
    for rel in rel_paths:
        content_hash, size = _file_sha256(root / rel)
        total_bytes += size
        leaf = hashlib.sha256(b"\x00" + rel.encode("utf-8") + b"\x00" + content_hash)
        top.update(leaf.digest())
    return PackageDigest(value=top.digest(), file_count=len(rel_paths), total_bytes=total_bytes)


def load_manifest(root: str | Path) -> PackageManifest:
    """Parse and validate ``attestrep.manifest`` at the top of ``root``.

    Line-oriented ``key = value``; ``#`` starts a comment line. Keys:
    ``entrypoint`` (required, once), ``output`` and ``env`` (repeatable,
    ``env`` values are ``name@version``), ``meta.<k>`` (repeatable).
    """
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ManifestMissing(str(root))

    entrypoint: str | None = None
    outputs: list[str] = []
    env_spec: list[tuple[str, str]] = []
    metadata: dict[str, str] = {}

    try:
        text = manifest_path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestParseError(0, f"cannot read manifest: {exc}") from exc

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ManifestParseError(lineno, "expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ManifestParseError(lineno, "empty key or value")
        if key == "entrypoint":
            if entrypoint is not None:
                raise ManifestParseError(lineno, "duplicate entrypoint")
            entrypoint = value
        elif key == "output":
            outputs.append(value)
        elif key == "env":
            name, sep, version = value.partition("@")
            if not sep or not name or not version:
                raise ManifestParseError(lineno, "env entries must be name@version")
            env_spec.append((name, version))
        elif key.startswith("meta."):
            meta_key = key[len("meta."):]
            if not meta_key:
                raise ManifestParseError(lineno, "empty meta key")
            metadata[meta_key] = value
        else:
            raise ManifestParseError(lineno, f"unknown key {key!r}")

    if entrypoint is None:
        raise ManifestParseError(0, "missing required key 'entrypoint'")

    return PackageManifest(
        entrypoint=entrypoint,
        declared_outputs=tuple(outputs),
        env_spec=tuple(env_spec),
        metadata=metadata,
    )
