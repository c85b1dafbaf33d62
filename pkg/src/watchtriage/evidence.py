"""Core domain types and the tamper-evident evidence bundle.

Timestamps are stored as UTC epoch seconds everywhere; an IANA zone name is
carried only for rendering. Evidence payloads are hashed at collection time
and the bundle manifest is a canonical JSON document so its digest is
reproducible byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Mapping, Optional, Sequence
from zoneinfo import ZoneInfo

DEFAULT_DISPLAY_ZONE = "Asia/Seoul"
DEFAULT_HASH = "sha256"


class EvidenceError(Exception):
    """Base error for evidence handling."""


class DigestMismatchError(EvidenceError):
    """Stored bytes no longer match an item's recorded digest."""


class InvalidBundleError(EvidenceError):
    """Bundle violates a structural invariant."""


def compute_digest(data: bytes, algorithm: str = DEFAULT_HASH) -> str:
    """Hex digest of raw bytes under the configured hash algorithm."""
    return hashlib.new(algorithm, data).hexdigest()


def canonical_json_bytes(obj) -> bytes:
    """Byte-stable JSON: sorted keys, no insignificant whitespace, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


@dataclass(frozen=True, order=True)
class Timestamp:
    """Point in time as UTC epoch seconds; zone is for rendering only."""

    epoch: int
    zone: str = field(default=DEFAULT_DISPLAY_ZONE, compare=False)

    def __post_init__(self):
        if self.epoch < 0:
            raise ValueError(f"epoch must be >= 0, got {self.epoch}")

    def render(self) -> str:
        """Wall-clock string in the display zone with explicit UTC offset."""
        local = datetime.fromtimestamp(self.epoch, ZoneInfo(self.zone))
        offset = local.strftime("%z")
        return f"{local:%Y-%m-%d %H:%M:%S} {offset[:3]}:{offset[3:]}"

    def wall(self, fmt: str = "%Y-%m-%d %H:%M:%S") -> str:
        """Bare wall-clock string in the display zone (no offset suffix)."""
        return datetime.fromtimestamp(self.epoch, ZoneInfo(self.zone)).strftime(fmt)

    def shifted(self, seconds: int) -> "Timestamp":
        return Timestamp(self.epoch + seconds, self.zone)


def parse_timestamp(text: str, zone: str = DEFAULT_DISPLAY_ZONE) -> Timestamp:
    """Parse a rendered timestamp.

    Accepts the render() format ("YYYY-MM-DD HH:MM:SS +HH:MM"), the same
    without an offset (interpreted in `zone`), and bare epoch integers.
    """
    text = text.strip()
    if text.isdigit():
        return Timestamp(int(text), zone)
    parts = text.rsplit(" ", 1)
    if len(parts) == 2 and (parts[1].startswith("+") or parts[1].startswith("-")):
        naive = datetime.strptime(parts[0], "%Y-%m-%d %H:%M:%S")
        sign = 1 if parts[1][0] == "+" else -1
        hh, mm = parts[1][1:].split(":")
        offset = sign * (int(hh) * 3600 + int(mm) * 60)
        epoch = int(naive.replace(tzinfo=timezone.utc).timestamp()) - offset
        return Timestamp(epoch, zone)
    local = datetime.strptime(text, "%Y-%m-%d %H:%M:%S").replace(tzinfo=ZoneInfo(zone))
    return Timestamp(int(local.timestamp()), zone)


@dataclass(frozen=True)
class TimeBucket:
    """Half-open interval [start, start + duration)."""

    start: Timestamp
    duration_seconds: int = 3600

    def __post_init__(self):
        if self.duration_seconds <= 0:
            raise ValueError(f"duration_seconds must be positive, got {self.duration_seconds}")

    @property
    def end_epoch(self) -> int:
        return self.start.epoch + self.duration_seconds

    def contains(self, t: Timestamp | int) -> bool:
        epoch = t.epoch if isinstance(t, Timestamp) else t
        return self.start.epoch <= epoch < self.end_epoch


@dataclass(frozen=True)
class DeviceProfile:
    model_number: str = ""
    android_version: str = ""
    wear_os_version: str = ""
    cpu_abi: str = ""
    adb_host_name: str = ""

    def to_dict(self) -> dict:
        return {
            "model_number": self.model_number,
            "android_version": self.android_version,
            "wear_os_version": self.wear_os_version,
            "cpu_abi": self.cpu_abi,
            "adb_host_name": self.adb_host_name,
        }


class SourceKind(str, Enum):
    USAGESTATS = "usagestats"
    NETSTATS = "netstats"
    NETWORK_STACK = "network_stack"
    GETPROP = "getprop"
    FILEZILLA_XML = "filezilla_xml"
    RECENTSERVERS_XML = "recentservers_xml"
    KNOWN_HOSTS = "known_hosts"
    MANIFEST_XML = "manifest_xml"
    APP_INVENTORY = "app_inventory"


@dataclass(frozen=True)
class EvidenceItem:
    """One raw acquired payload, identified by the digest of its exact bytes."""

    source_kind: SourceKind
    collected_at: Timestamp
    raw_bytes_digest: str
    origin_label: str = ""

    @classmethod
    def from_bytes(
        cls,
        source_kind: SourceKind,
        raw: bytes,
        collected_at: Timestamp,
        origin_label: str = "",
        algorithm: str = DEFAULT_HASH,
    ) -> "EvidenceItem":
        return cls(source_kind, collected_at, compute_digest(raw, algorithm), origin_label)

    def key(self) -> str:
        """Stable identifier, unique per bundle (enforced at seal time)."""
        return f"{self.source_kind.value}:{self.origin_label}:{self.collected_at.epoch}"

    def to_dict(self) -> dict:
        return {
            "source_kind": self.source_kind.value,
            "collected_at": self.collected_at.epoch,
            "raw_bytes_digest": self.raw_bytes_digest,
            "origin_label": self.origin_label,
        }


@dataclass(frozen=True)
class EvidenceBundle:
    items: tuple[EvidenceItem, ...]
    device: Optional[DeviceProfile]
    bundle_manifest_digest: str
    hash_algorithm: str = DEFAULT_HASH

    def manifest_document(self) -> dict:
        return bundle_manifest_document(self.items, self.device, self.hash_algorithm)


def bundle_manifest_document(
    items: Sequence[EvidenceItem],
    device: Optional[DeviceProfile],
    algorithm: str = DEFAULT_HASH,
) -> dict:
    return {
        "hash_algorithm": algorithm,
        "items": [it.to_dict() for it in items],
        "device": device.to_dict() if device else None,
    }


def seal_bundle(
    items: Sequence[EvidenceItem],
    device: Optional[DeviceProfile] = None,
    *,
    payloads: Optional[Mapping[str, bytes]] = None,
    algorithm: str = DEFAULT_HASH,
) -> EvidenceBundle:
    """Seal items into a bundle with a deterministic manifest digest.

    When `payloads` (item key -> raw bytes) is supplied, every item's digest
    is recomputed from the stored bytes first; a mismatch aborts the seal.
    Sealing is order-sensitive: permuting items changes the manifest digest.
    """
    if not items:
        raise InvalidBundleError("cannot seal an empty bundle")
    seen = set()
    for item in items:
        if item.key() in seen:
            raise InvalidBundleError(
                f"duplicate evidence item {item.key()}: source_kind must be unique "
                "per origin_label at a given collected_at"
            )
        seen.add(item.key())
        if payloads is not None:
            raw = payloads.get(item.key())
            if raw is None:
                raise DigestMismatchError(f"no stored bytes supplied for item {item.key()}")
            actual = compute_digest(raw, algorithm)
            if actual != item.raw_bytes_digest:
                raise DigestMismatchError(
                    f"digest mismatch for item {item.key()}: "
                    f"recorded {item.raw_bytes_digest}, stored bytes hash to {actual}"
                )
    manifest = bundle_manifest_document(items, device, algorithm)
    digest = compute_digest(canonical_json_bytes(manifest), algorithm)
    return EvidenceBundle(tuple(items), device, digest, algorithm)


@dataclass(frozen=True)
class ItemVerification:
    item_key: str
    status: str  # "pass" | "fail" | "missing"
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    results: tuple[ItemVerification, ...]
    manifest_ok: bool

    @property
    def overall_pass(self) -> bool:
        return self.manifest_ok and all(r.status == "pass" for r in self.results)


def verify_bundle(bundle: EvidenceBundle, stored_bytes: Mapping[str, bytes]) -> VerificationReport:
    """Re-hash stored bytes against the bundle; one result per item.

    `stored_bytes` maps item keys (EvidenceItem.key()) to raw payloads.
    Items with no stored payload report status "missing".
    """
    results = []
    for item in bundle.items:
        raw = stored_bytes.get(item.key())
        if raw is None:
            results.append(ItemVerification(item.key(), "missing", "no stored bytes for item"))
            continue
        actual = compute_digest(raw, bundle.hash_algorithm)
        if actual == item.raw_bytes_digest:
            results.append(ItemVerification(item.key(), "pass"))
        else:
            results.append(
                ItemVerification(item.key(), "fail", f"recorded {item.raw_bytes_digest}, got {actual}")
            )
    manifest = bundle_manifest_document(bundle.items, bundle.device, bundle.hash_algorithm)
    recomputed = compute_digest(canonical_json_bytes(manifest), bundle.hash_algorithm)
    return VerificationReport(tuple(results), manifest_ok=(recomputed == bundle.bundle_manifest_digest))
