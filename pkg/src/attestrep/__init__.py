"""attestrep: execute replication packages, attest the run, verify the proof.

Authors run a package under a simulated VM-level attestation provider and
obtain a portable proof bundle binding the exact code tree to the outputs it
produced. Journals and readers check the bundle against a pinned trust root
in milliseconds, without re-running anything. A small portal service covers
the hosted flow: submit, process, archive, and public verification, with a
hash-chained audit log. An economics module evaluates when the scheme is
worth adopting.
"""

from attestrep.package_model import PackageDigest, PackageManifest, digest_package, load_manifest
from attestrep.attestation import AttestationProvider, ProviderConfig
from attestrep.bundle import ProofBundle, build_bundle, parse_bundle, serialize_bundle
from attestrep.verifier import Verdict, verify_against_archive, verify_bundle

__all__ = [
    "AttestationProvider",
    "PackageDigest",
    "PackageManifest",
    "ProofBundle",
    "ProviderConfig",
    "Verdict",
    "build_bundle",
    "digest_package",
    "load_manifest",
    "parse_bundle",
    "serialize_bundle",
    "verify_against_archive",
    "verify_bundle",
]

__version__ = "0.1.0"
