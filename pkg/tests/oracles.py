"""Independent oracles used to cross-check the main implementation.

These are deliberately naive, self-contained reimplementations written
before the modules they check. They must stay independent: do not import
anything from ``attestrep`` here.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from fractions import Fraction


def naive_tree_digest(root: str) -> str:
    """Digest a file tree the slow, obvious way.

    Enumerate regular files with os.walk, sort the UTF-8 relative paths
    by byte order, hash each as 0x00 || path || 0x00 || sha256(content),
    then hash 0x01 || all leaves. Returns lowercase hex.
    """
    entries: list[tuple[bytes, bytes]] = []
    for dirpath, _dirnames, filenames in os.walk(root):
        for name in filenames:
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, root).replace(os.sep, "/")
            with open(full, "rb") as fh:
                content = fh.read()
            entries.append((rel.encode("utf-8"), hashlib.sha256(content).digest()))
    entries.sort(key=lambda pair: pair[0])
    top = hashlib.sha256()
    top.update(b"\x01")
    for path_bytes, content_hash in entries:
        leaf = hashlib.sha256(b"\x00" + path_bytes + b"\x00" + content_hash).digest()
        top.update(leaf)
    return top.hexdigest()


def spreadsheet_aggregate(csv_bytes: bytes) -> dict:
    """Column-sum style statistics over a trial CSV, in exact rationals.

    Returns per-provider success/fail counts, cost min/mean/max and the
    runtime mean in hours (success rows with a runtime only), plus the
    overall runtime mean. Values are Fractions or ints; the caller is
    responsible for any rounding before comparison.
    """
    rows = list(csv.DictReader(io.StringIO(csv_bytes.decode("utf-8"))))
    out: dict = {"providers": {}, "overall_runtime_mean_hours": None}
    all_runtimes: list[Fraction] = []
    for provider in sorted({row["provider"] for row in rows}):
        mine = [row for row in rows if row["provider"] == provider]
        successes = [row for row in mine if row["status"] == "Success"]
        fails = [row for row in mine if row["status"] == "Fail"]
        costs = [Fraction(row["cost_usd"]) for row in successes]
        runtimes = [
            Fraction(row["runtime_minutes"]) / 60
            for row in successes
            if row["runtime_minutes"].strip() != ""
        ]
        all_runtimes.extend(runtimes)
        out["providers"][provider] = {
            "success_count": len(successes),
            "fail_count": len(fails),
            "success_rate": Fraction(len(successes), len(successes) + len(fails)),
            "cost_min": min(costs),
            "cost_max": max(costs),
            "cost_mean": sum(costs) / len(costs),
            "runtime_mean_hours": sum(runtimes) / len(runtimes) if runtimes else None,
        }
    if all_runtimes:
        out["overall_runtime_mean_hours"] = sum(all_runtimes) / len(all_runtimes)
    return out
