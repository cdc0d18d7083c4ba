"""Thin HTTP front end over a Portal.

JSON in and out except for archive upload and proof download, which are
raw bytes. Domain failures map to 4xx with ``{"error": name, "detail":
message}``; nothing portal-internal leaks into responses.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from attestrep.archive import ArchiveMalformed
from attestrep.package_model import PackageError
from attestrep.portal.core import (
    DuplicateSubmission,
    Portal,
    UnknownSubmission,
    UnknownToken,
    WrongState,
)

logger = logging.getLogger(__name__)

AUTHOR_HEADER = "X-Author-Id"

_STATUS = {
    ArchiveMalformed: 400,
    PackageError: 400,
    DuplicateSubmission: 409,
    WrongState: 409,
    UnknownSubmission: 404,
    UnknownToken: 404,
}


def _error_status(exc: Exception) -> int:
    for klass, status in _STATUS.items():
        if isinstance(exc, klass):
            return status
    return 500


class PortalRequestHandler(BaseHTTPRequestHandler):
    server: "PortalHTTPServer"
    protocol_version = "HTTP/1.1"

    @property
    def portal(self) -> Portal:
        return self.server.portal

    def log_message(self, format: str, *args) -> None:
        logger.debug("%s %s", self.address_string(), format % args)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length) if length else b""

    def _send(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload: dict) -> None:
        self._send(status, json.dumps(payload).encode("utf-8"))

    def _send_error_json(self, exc: Exception) -> None:
        status = _error_status(exc)
        if status == 500:
            logger.exception("internal error handling %s %s", self.command, self.path)
            self._send_json(500, {"error": "InternalError", "detail": "internal error"})
        else:
            self._send_json(status, {"error": type(exc).__name__, "detail": str(exc)})

    def do_POST(self) -> None:
        parts = [p for p in urlparse(self.path).path.split("/") if p]
        try:
            if parts == ["v1", "submissions"]:
                author = self.headers.get(AUTHOR_HEADER, "anonymous")
                submission = self.portal.submit(self._read_body(), author_id=author)
                self._send_json(201, {"submission_id": submission.submission_id})
            elif len(parts) == 4 and parts[:2] == ["v1", "submissions"] and parts[3] == "process":
                submission = self.portal.process(parts[2])
                self._send_json(200, submission.to_dict())
            elif parts == ["v1", "verify"]:
                self._handle_verify(self._read_body())
            else:
                self._send_json(404, {"error": "NotFound", "detail": self.path})
        except Exception as exc:  # noqa: BLE001 - every failure becomes a JSON response
            self._send_error_json(exc)

    def do_GET(self) -> None:
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            if len(parts) == 3 and parts[:2] == ["v1", "submissions"]:
                self._send_json(200, self.portal.get_submission(parts[2]).to_dict())
            elif len(parts) == 3 and parts[:2] == ["v1", "proofs"]:
                result = self.portal.public_verify(parts[2])
                self._send(200, result.bundle_bytes or b"", content_type="application/octet-stream")
            elif parts == ["v1", "audit-log"]:
                query = parse_qs(url.query)
                from_seq = int(query.get("from_seq", ["0"])[0])
                entries = [entry.to_dict() for entry in self.portal.audit_entries(from_seq=from_seq)]
                self._send_json(200, {"entries": entries})
            else:
                self._send_json(404, {"error": "NotFound", "detail": self.path})
        except Exception as exc:  # noqa: BLE001
            self._send_error_json(exc)

    def _handle_verify(self, body: bytes) -> None:
        token = None
        try:
            payload = json.loads(body.decode("utf-8"))
            if isinstance(payload, dict) and "token" in payload:
                token = payload["token"]
        except (UnicodeDecodeError, json.JSONDecodeError):
            pass
        if token is not None:
            result = self.portal.public_verify(str(token))
            self._send_json(200, result.to_dict())
        else:
            verdict = self.portal.verify_bundle_bytes(body)
            self._send_json(200, verdict.to_dict())


class PortalHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], portal: Portal) -> None:
        super().__init__(address, PortalRequestHandler)
        self.portal = portal


def make_server(portal: Portal, host: str = "127.0.0.1", port: int = 0) -> PortalHTTPServer:
    """Bind a threaded HTTP server for the portal; port 0 picks a free port."""
    return PortalHTTPServer((host, port), portal)
