"""Simulated VM-level attestation provider.

Produces signed quotes binding a 32-byte code-image measurement and a
64-byte caller-controlled report-data field, plus an endorsement chain
linking the quote-signing key to a simulated vendor root. The key hierarchy
is derived deterministically from a 32-byte seed so fixtures are stable; a
real TDX/SEV-SNP backend would slot in behind the same surface with
hardware-held keys and a vendor-issued chain.

Signatures are Ed25519 (deterministic, 64 bytes); hashes are SHA-256. The
signature covers the canonical JSON body of each structure minus its own
``signature`` (and, for quotes, ``signing_key_id``) field.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from attestrep.canonical import canonical_json_bytes

QUOTE_VERSION = 1
SEED_SIZE = 32
MEASUREMENT_SIZE = 32
REPORT_DATA_SIZE = 64
SIGNATURE_SIZE = 64
KEY_ID_SIZE = 32

ROOT_STATEMENT_TYPE = "vendor-root-v1"
ENDORSEMENT_STATEMENT_TYPE = "attestation-key-endorsement-v1"

_ATTEST_KEY_INFO = b"attest-key-v1"

DEFAULT_PROVIDER_ID = "SIM-VMTEE-1"
DEFAULT_VALIDITY_SECONDS = 10 * 365 * 24 * 3600


class AttestationError(Exception):
    """Base class for attestation provider failures."""


class BadSeedLength(AttestationError):
    def __init__(self, got: int) -> None:
        super().__init__(f"root_secret_seed must be {SEED_SIZE} bytes, got {got}")


class BadMeasurementLength(AttestationError):
    def __init__(self, got: int) -> None:
        super().__init__(f"measurement must be {MEASUREMENT_SIZE} bytes, got {got}")


class BadReportDataLength(AttestationError):
    def __init__(self, got: int) -> None:
        super().__init__(f"report_data must be {REPORT_DATA_SIZE} bytes, got {got}")


def key_fingerprint(public_key_bytes: bytes) -> bytes:
    """32-byte identifier of a raw Ed25519 public key."""
    return hashlib.sha256(public_key_bytes).digest()


def _verify_ed25519(public_key_bytes: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key_bytes).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


@dataclass(frozen=True)
class ProviderConfig:
    """Simulated provider configuration; real backends supply external chains."""

    provider_id: str = DEFAULT_PROVIDER_ID
    root_secret_seed: bytes = b"\x00" * SEED_SIZE
    attestation_validity: int = DEFAULT_VALIDITY_SECONDS

    def __post_init__(self) -> None:
        if len(self.root_secret_seed) != SEED_SIZE:
            raise BadSeedLength(len(self.root_secret_seed))
        if self.attestation_validity <= 0:
            raise ValueError("attestation_validity must be positive seconds")


@dataclass(frozen=True)
class AttestationQuote:
    """Signed measurement + report-data structure, one format version so far."""

    version: int
    provider_id: str
    measurement: bytes
    report_data: bytes
    issued_at: int
    signature: bytes
    signing_key_id: bytes

    def canonical_body(self) -> bytes:
        """Serialization the signature covers (no signature/signing_key_id)."""
        return canonical_json_bytes(
            {
                "version": self.version,
                "provider_id": self.provider_id,
                "measurement": self.measurement.hex(),
                "report_data": self.report_data.hex(),
                "issued_at": self.issued_at,
            }
        )

    def verify_signature(self, attestation_public_key: bytes) -> bool:
        if self.signing_key_id != key_fingerprint(attestation_public_key):
            return False
        return _verify_ed25519(attestation_public_key, self.signature, self.canonical_body())

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "provider_id": self.provider_id,
            "measurement": self.measurement.hex(),
            "report_data": self.report_data.hex(),
            "issued_at": self.issued_at,
            "signature": self.signature.hex(),
            "signing_key_id": self.signing_key_id.hex(),
        }


@dataclass(frozen=True)
class RootStatement:
    """Self-signed statement naming the simulated vendor root public key."""

    provider_id: str
    root_public_key: bytes
    signature: bytes

    def canonical_body(self) -> bytes:
        return canonical_json_bytes(
            {
                "statement": ROOT_STATEMENT_TYPE,
                "provider_id": self.provider_id,
                "root_public_key": self.root_public_key.hex(),
            }
        )

    def verify(self) -> bool:
        return _verify_ed25519(self.root_public_key, self.signature, self.canonical_body())


@dataclass(frozen=True)
class AttestationEndorsement:
    """Root-signed endorsement of the attestation public key with a validity window."""

    provider_id: str
    attestation_public_key: bytes
    not_before: int
    not_after: int
    signature: bytes

    def canonical_body(self) -> bytes:
        return canonical_json_bytes(
            {
                "statement": ENDORSEMENT_STATEMENT_TYPE,
                "provider_id": self.provider_id,
                "attestation_public_key": self.attestation_public_key.hex(),
                "not_before": self.not_before,
                "not_after": self.not_after,
            }
        )

    def verify(self, root_public_key: bytes) -> bool:
        return _verify_ed25519(root_public_key, self.signature, self.canonical_body())


@dataclass(frozen=True)
class EndorsementChain:
    root_statement: RootStatement
    attestation_endorsement: AttestationEndorsement

    def verify(self) -> bool:
        """Chain self-consistency; trusting the root is the caller's decision."""
        return (
            self.root_statement.verify()
            and self.attestation_endorsement.not_before < self.attestation_endorsement.not_after
            and self.attestation_endorsement.verify(self.root_statement.root_public_key)
        )

    def to_dict(self) -> dict:
        return {
            "root_statement": {
                "statement": ROOT_STATEMENT_TYPE,
                "provider_id": self.root_statement.provider_id,
                "root_public_key": self.root_statement.root_public_key.hex(),
                "signature": self.root_statement.signature.hex(),
            },
            "attestation_endorsement": {
                "statement": ENDORSEMENT_STATEMENT_TYPE,
                "provider_id": self.attestation_endorsement.provider_id,
                "attestation_public_key": self.attestation_endorsement.attestation_public_key.hex(),
                "not_before": self.attestation_endorsement.not_before,
                "not_after": self.attestation_endorsement.not_after,
                "signature": self.attestation_endorsement.signature.hex(),
            },
        }


class AttestationProvider:
    """Holds the derived key pair hierarchy; read-only after construction.

    ``sign_quote`` may be called concurrently: key material never mutates
    after init.
    """

    def __init__(self, config: ProviderConfig, now: int | None = None) -> None:
        self.config = config
        self._root_key = Ed25519PrivateKey.from_private_bytes(config.root_secret_seed)
        attest_seed = hashlib.sha256(config.root_secret_seed + _ATTEST_KEY_INFO).digest()
        self._attestation_key = Ed25519PrivateKey.from_private_bytes(attest_seed)
        self.root_public_key = self._root_key.public_key().public_bytes_raw()
        self.attestation_public_key = self._attestation_key.public_key().public_bytes_raw()
        self.signing_key_id = key_fingerprint(self.attestation_public_key)

        not_before = int(time.time()) if now is None else int(now)
        not_after = not_before + config.attestation_validity
        root_stmt = RootStatement(
            provider_id=config.provider_id,
            root_public_key=self.root_public_key,
            signature=b"",
        )
        root_stmt = RootStatement(
            provider_id=config.provider_id,
            root_public_key=self.root_public_key,
            signature=self._root_key.sign(root_stmt.canonical_body()),
        )
        endorsement = AttestationEndorsement(
            provider_id=config.provider_id,
            attestation_public_key=self.attestation_public_key,
            not_before=not_before,
            not_after=not_after,
            signature=b"",
        )
        endorsement = AttestationEndorsement(
            provider_id=config.provider_id,
            attestation_public_key=self.attestation_public_key,
            not_before=not_before,
            not_after=not_after,
            signature=self._root_key.sign(endorsement.canonical_body()),
        )
        self._chain = EndorsementChain(root_statement=root_stmt, attestation_endorsement=endorsement)

    def sign_quote(self, measurement: bytes, report_data: bytes, now: int | None = None) -> AttestationQuote:
        """Issue a quote over (measurement, report_data) at ``now`` UTC seconds."""
        if len(measurement) != MEASUREMENT_SIZE:
            raise BadMeasurementLength(len(measurement))
        if len(report_data) != REPORT_DATA_SIZE:
            raise BadReportDataLength(len(report_data))
        issued_at = int(time.time()) if now is None else int(now)
        unsigned = AttestationQuote(
            version=QUOTE_VERSION,
            provider_id=self.config.provider_id,
            measurement=measurement,
            report_data=report_data,
            issued_at=issued_at,
            signature=b"",
            signing_key_id=self.signing_key_id,
        )
        return AttestationQuote(
            version=QUOTE_VERSION,
            provider_id=self.config.provider_id,
            measurement=measurement,
            report_data=report_data,
            issued_at=issued_at,
            signature=self._attestation_key.sign(unsigned.canonical_body()),
            signing_key_id=self.signing_key_id,
        )

    def export_chain(self) -> EndorsementChain:
        return self._chain


def init_provider(config: ProviderConfig, now: int | None = None) -> AttestationProvider:
    """Derive the provider key hierarchy and endorsement chain from config."""
    return AttestationProvider(config, now=now)
