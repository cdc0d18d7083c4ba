"""Execute a package entrypoint in an isolated working copy and record the run.

The original tree is never touched: the entrypoint runs inside a fresh copy
with a scrubbed environment (PATH/HOME/LANG allowlist), stdout and stderr
stream to log files beside the copy, and declared outputs are snapshotted
and digested after the run. Copy-on-run substitutes for VM/container
isolation at desk scale; the data flow and proof binding are the same.

Sandbox layout under ``work_dir``::

    tree/            fresh copy of the package, the process working directory
    outputs/         post-run snapshot of matched declared outputs
    build.log        sandbox preparation record
    run.stdout.log   captured stdout
    run.stderr.log   captured stderr
"""

from __future__ import annotations

import hashlib
import logging
import os
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from attestrep.package_model import PackageDigest, PackageManifest, digest_package

logger = logging.getLogger(__name__)

ENV_ALLOWLIST = ("PATH", "HOME", "LANG")

_GIB = Decimal(1 << 30)
_CENTS4 = Decimal("0.0001")


class RunnerError(Exception):
    """Base class for execution failures."""


class EntrypointMissing(RunnerError):
    def __init__(self, path: str, reason: str = "not found") -> None:
        super().__init__(f"entrypoint {path}: {reason}")
        self.path = path


class TimeLimitExceeded(RunnerError):
    def __init__(self, max_seconds: float) -> None:
        super().__init__(f"run exceeded {max_seconds} s")
        self.max_seconds = max_seconds


class OutputLimitExceeded(RunnerError):
    def __init__(self, total_bytes: int, max_bytes: int) -> None:
        super().__init__(f"outputs total {total_bytes} bytes, limit {max_bytes}")


class NoDeclaredOutputsMatched(RunnerError):
    """The run exited 0 but produced none of its declared outputs.

    Usually the dependency or packaging failure mode: the script ran but
    did not do what the manifest promised.
    """

    def __init__(self, declared: tuple[str, ...]) -> None:
        super().__init__(f"no files matched declared outputs {list(declared)}")


@dataclass(frozen=True)
class ExecutionLimits:
    max_seconds: float = 3600.0
    max_output_bytes: int = 1 << 30


@dataclass(frozen=True)
class ExecutionRecord:
    """Immutable record of one sandboxed run."""

    package_digest: PackageDigest
    output_digest: PackageDigest
    exit_status: int
    wall_seconds: float
    stdout_log_digest: bytes
    stderr_log_digest: bytes
    started_at: int
    finished_at: int
    nonce: bytes

    def __post_init__(self) -> None:
        if self.finished_at < self.started_at:
            raise ValueError("finished_at before started_at")
        if self.wall_seconds < 0:
            raise ValueError("wall_seconds negative")
        if len(self.nonce) != 32:
            raise ValueError("nonce must be 32 bytes")
        if len(self.stdout_log_digest) != 32 or len(self.stderr_log_digest) != 32:
            raise ValueError("log digests must be 32 bytes")


@dataclass(frozen=True)
class CostRates:
    hourly_rate_usd: Decimal
    storage_usd_per_gib: Decimal = Decimal("0")

    def __post_init__(self) -> None:
        if self.hourly_rate_usd <= 0:
            raise ValueError("hourly_rate_usd must be positive")
        if self.storage_usd_per_gib < 0:
            raise ValueError("storage_usd_per_gib must be non-negative")


@dataclass(frozen=True)
class CostEstimate:
    hourly_rate_usd: Decimal
    compute_cost_usd: Decimal
    storage_cost_usd: Decimal

    @property
    def total_usd(self) -> Decimal:
        return self.compute_cost_usd + self.storage_cost_usd


def _resolve_command(entrypoint: Path) -> list[str]:
    if not entrypoint.is_file():
        raise EntrypointMissing(str(entrypoint))
    if os.access(entrypoint, os.X_OK):
        return [str(entrypoint)]
    suffix = entrypoint.suffix.lower()
    if suffix == ".sh":
        return ["/bin/sh", str(entrypoint)]
    if suffix == ".py":
        return [sys.executable, str(entrypoint)]
    raise EntrypointMissing(str(entrypoint), "not executable and no interpreter for suffix")


def _collect_outputs(tree: Path, patterns: tuple[str, ...]) -> list[str]:
    """Relative paths of regular files matching the declared output globs.

    Symlinks are never followed or matched; the run may have created them
    and they must not leak content from outside the sandbox.
    """
    matched: set[str] = set()
    for pattern in patterns:
        target = tree / pattern.rstrip("/")
        if target.is_dir() and not target.is_symlink():
            for dirpath, dirnames, filenames in os.walk(target, followlinks=False):
                dirnames[:] = [d for d in dirnames if not (Path(dirpath) / d).is_symlink()]
                for name in filenames:
                    full = Path(dirpath) / name
                    if full.is_file() and not full.is_symlink():
                        matched.add(full.relative_to(tree).as_posix())
        else:
            for hit in tree.glob(pattern):
                if hit.is_file() and not hit.is_symlink():
                    matched.add(hit.relative_to(tree).as_posix())
    return sorted(matched)


def _snapshot_outputs(tree: Path, rel_paths: list[str], snapshot: Path) -> int:
    total = 0
    for rel in rel_paths:
        src = tree / rel
        dst = snapshot / rel
        dst.parent.mkdir(parents=True, exist_ok=True)
        data = src.read_bytes()
        dst.write_bytes(data)
        total += len(data)
    return total


def _sha256_file(path: Path) -> bytes:
    hasher = hashlib.sha256()
    with path.open("rb") as fh:
        while chunk := fh.read(1 << 20):
            hasher.update(chunk)
    return hasher.digest()


def execute(
    root: str | Path,
    manifest: PackageManifest,
    limits: ExecutionLimits = ExecutionLimits(),
    work_dir: str | Path | None = None,
    nonce: bytes | None = None,
) -> ExecutionRecord:
    """Run ``manifest.entrypoint`` in a fresh copy of ``root``.

    ``work_dir`` receives the sandbox and log files and is kept for the
    caller (a temporary directory is created when omitted). ``nonce``
    overrides the per-run random nonce; only tests and the reproducible
    CLI path should pass it.
    """
    root = Path(root)
    package_digest = digest_package(root)
    if nonce is None:
        nonce = os.urandom(32)
    if len(nonce) != 32:
        raise ValueError("nonce must be 32 bytes")

    work = Path(work_dir) if work_dir is not None else Path(tempfile.mkdtemp(prefix="attestrep-run-"))
    work.mkdir(parents=True, exist_ok=True)
    tree = work / "tree"
    if tree.exists():
        shutil.rmtree(tree)
    shutil.copytree(root, tree)
    logger.debug("sandbox prepared at %s", work)

    entrypoint = tree / manifest.entrypoint
    command = _resolve_command(entrypoint)

    build_log = work / "build.log"
    build_log.write_text(
        f"package_digest {package_digest.hex}\n"
        f"files {package_digest.file_count} bytes {package_digest.total_bytes}\n"
        f"entrypoint {manifest.entrypoint}\n"
        f"command {' '.join(command)}\n",
        encoding="utf-8",
    )

    env = {name: os.environ[name] for name in ENV_ALLOWLIST if name in os.environ}
    stdout_log = work / "run.stdout.log"
    stderr_log = work / "run.stderr.log"

    started_at = int(time.time())
    started_clock = time.monotonic()
    with stdout_log.open("wb") as out_fh, stderr_log.open("wb") as err_fh:
        proc = subprocess.Popen(command, cwd=tree, env=env, stdout=out_fh, stderr=err_fh)
        try:
            exit_status = proc.wait(timeout=limits.max_seconds)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            raise TimeLimitExceeded(limits.max_seconds) from None
    finished_at = int(time.time())
    wall_seconds = round(time.monotonic() - started_clock, 3)

    matched = _collect_outputs(tree, manifest.declared_outputs)
    if exit_status == 0 and not matched:
        raise NoDeclaredOutputsMatched(manifest.declared_outputs)

    snapshot = work / "outputs"
    if snapshot.exists():
        shutil.rmtree(snapshot)
    snapshot.mkdir()
    total_output_bytes = _snapshot_outputs(tree, matched, snapshot)
    if total_output_bytes > limits.max_output_bytes:
        raise OutputLimitExceeded(total_output_bytes, limits.max_output_bytes)
    output_digest = digest_package(snapshot)

    return ExecutionRecord(
        package_digest=package_digest,
        output_digest=output_digest,
        exit_status=exit_status,
        wall_seconds=wall_seconds,
        stdout_log_digest=_sha256_file(stdout_log),
        stderr_log_digest=_sha256_file(stderr_log),
        started_at=started_at,
        finished_at=finished_at,
        nonce=nonce,
    )


def estimate_cost(record: ExecutionRecord, rates: CostRates) -> CostEstimate:
    """Dollar cost of a run: VM time plus storage, exact to 4 decimal places.

    Stored bytes are the package plus the output snapshot, the two trees
    the portal archives.
    """
    wall = Decimal(str(record.wall_seconds))
    compute = (rates.hourly_rate_usd * wall / Decimal(3600)).quantize(_CENTS4, rounding=ROUND_HALF_UP)
    stored_bytes = Decimal(record.package_digest.total_bytes + record.output_digest.total_bytes)
    storage = (rates.storage_usd_per_gib * stored_bytes / _GIB).quantize(_CENTS4, rounding=ROUND_HALF_UP)
    return CostEstimate(
        hourly_rate_usd=rates.hourly_rate_usd,
        compute_cost_usd=compute,
        storage_cost_usd=storage,
    )
