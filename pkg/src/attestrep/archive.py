"""Package archive format: plain ustar tar, package path rules enforced.

Packing is deterministic (sorted paths, zeroed metadata) so archiving the
same tree twice gives identical bytes. Unpacking is strict: only regular
files and directories, relative forward-slash paths, no links of any kind.
"""

from __future__ import annotations

import io
import tarfile
from pathlib import Path

from attestrep.package_model import PathRuleViolation, validate_relative_path


class ArchiveMalformed(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


def pack_tree(root: str | Path) -> bytes:
    """Deterministic ustar archive of every regular file under ``root``.

    Symlinks are refused, matching the digest rules: an archive must
    round-trip to a tree with the same digest.
    """
    root = Path(root)
    if not root.is_dir():
        raise ArchiveMalformed(f"not a directory: {root}")
    paths = []
    for path in sorted(root.rglob("*"), key=lambda p: p.relative_to(root).as_posix()):
        if path.is_symlink():
            raise ArchiveMalformed(f"symlink in package tree: {path}")
        if path.is_file():
            paths.append(path)
    buffer = io.BytesIO()
    with tarfile.open(fileobj=buffer, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for path in paths:
            rel = path.relative_to(root).as_posix()
            info = tarfile.TarInfo(name=rel)
            data = path.read_bytes()
            info.size = len(data)
            info.mtime = 0
            info.uid = info.gid = 0
            info.uname = info.gname = ""
            info.mode = 0o755 if path.stat().st_mode & 0o100 else 0o644
            tar.addfile(info, io.BytesIO(data))
    return buffer.getvalue()


def unpack_archive(data: bytes, dest: str | Path, max_bytes: int = 1 << 30) -> None:
    """Extract a package archive into ``dest``, refusing anything unsafe."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    try:
        tar = tarfile.open(fileobj=io.BytesIO(data), mode="r:*")
    except tarfile.TarError as exc:
        raise ArchiveMalformed(f"unreadable tar: {exc}") from exc
    total = 0
    with tar:
        try:
            members = tar.getmembers()
        except tarfile.TarError as exc:
            raise ArchiveMalformed(f"unreadable tar: {exc}") from exc
        for member in members:
            name = member.name[2:] if member.name.startswith("./") else member.name
            if member.isdir():
                if name:
                    _check_path(name)
                    (dest / name).mkdir(parents=True, exist_ok=True)
                continue
            if not member.isreg():
                raise ArchiveMalformed(f"member {member.name!r} is not a regular file or directory")
            _check_path(name)
            total += member.size
            if total > max_bytes:
                raise ArchiveMalformed(f"archive exceeds {max_bytes} bytes unpacked")
            source = tar.extractfile(member)
            if source is None:
                raise ArchiveMalformed(f"member {member.name!r} has no content")
            target = dest / name
            target.parent.mkdir(parents=True, exist_ok=True)
            with source:
                target.write_bytes(source.read())
            if member.mode & 0o100:
                target.chmod(0o755)


def _check_path(name: str) -> None:
    try:
        validate_relative_path(name, "archive member")
    except PathRuleViolation as exc:
        raise ArchiveMalformed(str(exc)) from exc
