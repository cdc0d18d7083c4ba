from __future__ import annotations

import os
from decimal import Decimal
from pathlib import Path

import pytest

from attestrep.package_model import PackageDigest, digest_package, load_manifest
from attestrep.runner import (
    CostRates,
    EntrypointMissing,
    ExecutionLimits,
    ExecutionRecord,
    NoDeclaredOutputsMatched,
    OutputLimitExceeded,
    TimeLimitExceeded,
    estimate_cost,
    execute,
)
from conftest import make_package, run_package


def test_answer42_run(answer42: Path, tmp_path: Path) -> None:
    record = run_package(answer42, tmp_path / "work")
    assert record.exit_status == 0
    assert record.finished_at >= record.started_at
    assert abs(record.wall_seconds - (record.finished_at - record.started_at)) <= 2.0

    # output digest equals the digest of a tree holding exactly results/answer.txt
    expected_tree = tmp_path / "expected"
    (expected_tree / "results").mkdir(parents=True)
    (expected_tree / "results" / "answer.txt").write_text("42\n")
    assert record.output_digest == digest_package(expected_tree)


def test_nonzero_exit_recorded(tmp_path: Path) -> None:
    package = make_package(tmp_path / "pkg", script="#!/bin/sh\nexit 3\n")
    record = run_package(package, tmp_path / "work")
    assert record.exit_status == 3


def test_time_limit(tmp_path: Path) -> None:
    package = make_package(tmp_path / "pkg", script="#!/bin/sh\nsleep 10\n")
    with pytest.raises(TimeLimitExceeded):
        execute(package, load_manifest(package), limits=ExecutionLimits(max_seconds=0.3),
                work_dir=tmp_path / "work")


def test_entrypoint_missing(tmp_path: Path) -> None:
    package = make_package(tmp_path / "pkg")
    (package / "run.sh").unlink()
    with pytest.raises(EntrypointMissing):
        execute(package, load_manifest(package), work_dir=tmp_path / "work")


def test_no_declared_outputs_matched(tmp_path: Path) -> None:
    package = make_package(tmp_path / "pkg", script="#!/bin/sh\ntrue\n")
    with pytest.raises(NoDeclaredOutputsMatched):
        execute(package, load_manifest(package), work_dir=tmp_path / "work")


def test_failed_run_skips_output_check(tmp_path: Path) -> None:
    package = make_package(tmp_path / "pkg", script="#!/bin/sh\nexit 1\n")
    record = run_package(package, tmp_path / "work")
    assert record.exit_status == 1
    assert record.output_digest.file_count == 0


def test_output_limit(tmp_path: Path) -> None:
    package = make_package(
        tmp_path / "pkg",
        script="#!/bin/sh\nmkdir -p results\nhead -c 4096 /dev/zero > results/big.bin\n",
    )
    with pytest.raises(OutputLimitExceeded):
        execute(package, load_manifest(package), limits=ExecutionLimits(max_output_bytes=100),
                work_dir=tmp_path / "work")


def test_glob_output_patterns(tmp_path: Path) -> None:
    package = make_package(
        tmp_path / "pkg",
        script="#!/bin/sh\necho a > a.csv\necho b > b.csv\necho junk > junk.tmp\n",
        outputs=("*.csv",),
    )
    record = run_package(package, tmp_path / "work")
    assert record.output_digest.file_count == 2


def test_original_root_untouched(answer42: Path, tmp_path: Path) -> None:
    before = digest_package(answer42)
    run_package(answer42, tmp_path / "work")
    assert digest_package(answer42) == before
    assert not (answer42 / "results").exists()


def test_deterministic_package_has_stable_output_digest(answer42: Path, tmp_path: Path) -> None:
    first = run_package(answer42, tmp_path / "w1")
    second = run_package(answer42, tmp_path / "w2")
    assert first.output_digest == second.output_digest
    assert first.package_digest == second.package_digest
    assert first.nonce != second.nonce


def test_environment_is_scrubbed(tmp_path: Path) -> None:
    package = make_package(
        tmp_path / "pkg",
        script="#!/bin/sh\nmkdir -p results\nenv | cut -d= -f1 | sort > results/vars.txt\n",
    )
    os.environ["ATTESTREP_TEST_CANARY"] = "leak"
    try:
        work = tmp_path / "work"
        run_package(package, work)
        names = (work / "outputs" / "results" / "vars.txt").read_text().split()
    finally:
        del os.environ["ATTESTREP_TEST_CANARY"]
    assert "ATTESTREP_TEST_CANARY" not in names
    assert "PATH" in names
    # PWD/OLDPWD may be injected by the shell itself; nothing else may leak
    assert set(names) <= {"PATH", "HOME", "LANG", "PWD", "OLDPWD", "SHLVL", "_"}


def test_logs_written_beside_sandbox(answer42: Path, tmp_path: Path) -> None:
    work = tmp_path / "work"
    record = run_package(answer42, work)
    assert (work / "build.log").is_file()
    assert (work / "run.stdout.log").is_file()
    assert (work / "run.stderr.log").is_file()
    import hashlib

    assert record.stdout_log_digest == hashlib.sha256((work / "run.stdout.log").read_bytes()).digest()


def test_nonce_override(answer42: Path, tmp_path: Path) -> None:
    nonce = bytes(range(32))
    record = run_package(answer42, tmp_path / "work", nonce=nonce)
    assert record.nonce == nonce


def test_nonce_freshness_over_1000_runs(tmp_path: Path) -> None:
    package = make_package(tmp_path / "pkg", script="#!/bin/sh\necho x > out.txt\n", outputs=("out.txt",))
    manifest = load_manifest(package)
    nonces = {
        execute(package, manifest, work_dir=tmp_path / "runs" / str(i)).nonce
        for i in range(1000)
    }
    assert len(nonces) == 1000


def _record(wall_seconds: float, package_bytes: int = 0, output_bytes: int = 0) -> ExecutionRecord:
    return ExecutionRecord(
        package_digest=PackageDigest(value=b"\x01" * 32, file_count=1, total_bytes=package_bytes),
        output_digest=PackageDigest(value=b"\x02" * 32, file_count=1, total_bytes=output_bytes),
        exit_status=0,
        wall_seconds=wall_seconds,
        stdout_log_digest=b"\x03" * 32,
        stderr_log_digest=b"\x04" * 32,
        started_at=100,
        finished_at=100 + int(wall_seconds),
        nonce=b"\x05" * 32,
    )


class TestEstimateCost:
    def test_one_hour_at_calibrated_rate(self) -> None:
        estimate = estimate_cost(_record(3600.0), CostRates(hourly_rate_usd=Decimal("1.57")))
        assert estimate.compute_cost_usd == Decimal("1.5700")

    def test_zero_wall_time(self) -> None:
        estimate = estimate_cost(_record(0.0), CostRates(hourly_rate_usd=Decimal("1.57")))
        assert estimate.compute_cost_usd == Decimal("0.0000")

    def test_mean_runtime_reproduces_mean_cost(self) -> None:
        # rate solved so a 2.3 h mean run costs the 1.57 cross-platform mean
        estimate = estimate_cost(_record(8280.0), CostRates(hourly_rate_usd=Decimal("0.6826")))
        assert abs(estimate.compute_cost_usd - Decimal("1.57")) <= Decimal("0.01")

    def test_storage_component(self) -> None:
        rates = CostRates(hourly_rate_usd=Decimal("1"), storage_usd_per_gib=Decimal("0.10"))
        estimate = estimate_cost(_record(0.0, package_bytes=1 << 29, output_bytes=1 << 29), rates)
        assert estimate.storage_cost_usd == Decimal("0.1000")
        assert estimate.total_usd == Decimal("0.1000")

    def test_rounding_half_up(self) -> None:
        # 1.0 * 0.18 / 3600 h = 0.00005 -> rounds up at 4 places
        estimate = estimate_cost(_record(0.18), CostRates(hourly_rate_usd=Decimal("1")))
        assert estimate.compute_cost_usd == Decimal("0.0001")

    def test_rates_validated(self) -> None:
        with pytest.raises(ValueError):
            CostRates(hourly_rate_usd=Decimal("0"))
        with pytest.raises(ValueError):
            CostRates(hourly_rate_usd=Decimal("1"), storage_usd_per_gib=Decimal("-1"))
