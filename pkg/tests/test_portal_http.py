from __future__ import annotations

import threading
from pathlib import Path

import pytest
import requests

from attestrep.archive import pack_tree
from attestrep.bundle import parse_bundle
from attestrep.portal import Portal, make_server
from attestrep.verifier import verify_bundle
from conftest import PROVIDER_SEED, make_package


@pytest.fixture
def portal(tmp_path: Path) -> Portal:
    return Portal(tmp_path / "store", provider_seed=PROVIDER_SEED)


@pytest.fixture
def base_url(portal: Portal):
    server = make_server(portal, host="127.0.0.1", port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


@pytest.fixture
def archive(tmp_path: Path) -> bytes:
    return pack_tree(make_package(tmp_path / "answer42"))


def _submit(base_url: str, archive: bytes, author: str = "alice") -> str:
    response = requests.post(
        f"{base_url}/v1/submissions", data=archive, headers={"X-Author-Id": author}, timeout=10
    )
    assert response.status_code == 201, response.text
    return response.json()["submission_id"]


def test_submission_lifecycle(base_url: str, archive: bytes, portal: Portal) -> None:
    submission_id = _submit(base_url, archive)

    state = requests.get(f"{base_url}/v1/submissions/{submission_id}", timeout=10).json()
    assert state["state"] == "Received"

    processed = requests.post(f"{base_url}/v1/submissions/{submission_id}/process", timeout=30).json()
    assert processed["state"] == "Proved"
    token = processed["token"]

    proof = requests.get(f"{base_url}/v1/proofs/{token}", timeout=10)
    assert proof.status_code == 200
    assert proof.headers["Content-Type"] == "application/octet-stream"
    bundle = parse_bundle(proof.content)
    assert bundle.token == token
    assert verify_bundle(proof.content, [portal.provider.root_public_key], now=portal.clock()).accepted


def test_verify_endpoint_by_token(base_url: str, archive: bytes) -> None:
    submission_id = _submit(base_url, archive)
    token = requests.post(f"{base_url}/v1/submissions/{submission_id}/process", timeout=30).json()["token"]

    verdict = requests.post(f"{base_url}/v1/verify", json={"token": token}, timeout=10).json()
    assert verdict["verdict"] == "Accept"
    assert verdict["token"] == token


def test_verify_endpoint_by_bundle_bytes(base_url: str, archive: bytes) -> None:
    submission_id = _submit(base_url, archive)
    token = requests.post(f"{base_url}/v1/submissions/{submission_id}/process", timeout=30).json()["token"]
    bundle_bytes = requests.get(f"{base_url}/v1/proofs/{token}", timeout=10).content

    verdict = requests.post(f"{base_url}/v1/verify", data=bundle_bytes, timeout=10).json()
    assert verdict["verdict"] == "Accept"

    garbage = requests.post(f"{base_url}/v1/verify", data=b"junk", timeout=10).json()
    assert garbage["verdict"] == "Reject"
    assert garbage["reason"] == "ParseError"


def test_audit_log_endpoint(base_url: str, archive: bytes) -> None:
    submission_id = _submit(base_url, archive)
    requests.post(f"{base_url}/v1/submissions/{submission_id}/process", timeout=30)

    everything = requests.get(f"{base_url}/v1/audit-log", timeout=10).json()["entries"]
    assert [entry["seq"] for entry in everything] == list(range(len(everything)))
    assert len(everything) == 4

    tail = requests.get(f"{base_url}/v1/audit-log?from_seq=2", timeout=10).json()["entries"]
    assert [entry["seq"] for entry in tail] == [2, 3]


def test_error_statuses(base_url: str, archive: bytes) -> None:
    # malformed archive
    bad = requests.post(f"{base_url}/v1/submissions", data=b"nope", timeout=10)
    assert bad.status_code == 400
    assert bad.json()["error"] == "ArchiveMalformed"

    # duplicate
    _submit(base_url, archive)
    duplicate = requests.post(
        f"{base_url}/v1/submissions", data=archive, headers={"X-Author-Id": "alice"}, timeout=10
    )
    assert duplicate.status_code == 409
    assert duplicate.json()["error"] == "DuplicateSubmission"

    # unknown ids
    assert requests.get(f"{base_url}/v1/submissions/{'0' * 64}", timeout=10).status_code == 404
    assert requests.get(f"{base_url}/v1/proofs/{'0' * 64}", timeout=10).status_code == 404
    assert requests.post(f"{base_url}/v1/verify", json={"token": "0" * 64}, timeout=10).status_code == 404

    # wrong state
    submission_id = _submit(base_url, archive, author="bob")
    requests.post(f"{base_url}/v1/submissions/{submission_id}/process", timeout=30)
    again = requests.post(f"{base_url}/v1/submissions/{submission_id}/process", timeout=30)
    assert again.status_code == 409
    assert again.json()["error"] == "WrongState"

    # unknown route
    assert requests.get(f"{base_url}/v1/nope", timeout=10).status_code == 404


def test_concurrent_submissions(base_url: str, tmp_path: Path) -> None:
    archives = [
        pack_tree(make_package(tmp_path / f"pkg{i}", extra_files={"id.txt": f"{i}\n"}))
        for i in range(6)
    ]
    ids: list[str] = []
    errors: list[Exception] = []
    lock = threading.Lock()

    def worker(data: bytes) -> None:
        try:
            submission_id = _submit(base_url, data)
            with lock:
                ids.append(submission_id)
        except Exception as exc:  # pragma: no cover - surfaced via assertion below
            with lock:
                errors.append(exc)

    threads = [threading.Thread(target=worker, args=(data,)) for data in archives]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join(timeout=30)
    assert not errors
    assert len(set(ids)) == 6
