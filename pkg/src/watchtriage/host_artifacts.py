"""Parsers for PC-side corroborating artifacts.

Covers FileZilla server lists (recentservers.xml / sitemanager.xml /
filezilla.xml) and OpenSSH known_hosts. These are the files a PC keeps after
connecting to an FTP/SFTP server running on a watch, so an exact IP match
against a watch-side DHCP lease corroborates a transfer session.

Hashed known_hosts entries are preserved but never matched against plaintext
IP queries; an HMAC-based resolver is provided separately for investigators
who already hold candidate addresses.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .evidence import EvidenceItem, SourceKind, Timestamp, compute_digest

HASHED_SENTINEL = "|1|"


class HostArtifactError(Exception):
    """Fatal host-artifact parse failure (malformed XML)."""


class TransferProtocol(Enum):
    FTP = "ftp"
    SFTP = "sftp"
    FTPS = "ftps"
    OTHER = "other"


# FileZilla <Protocol> codes seen across schema versions.
_PROTOCOL_CODES = {"0": TransferProtocol.FTP, "1": TransferProtocol.SFTP,
                   "3": TransferProtocol.FTPS, "4": TransferProtocol.FTPS}
_PROTOCOL_NAMES = {p.value: p for p in TransferProtocol if p is not TransferProtocol.OTHER}


@dataclass(frozen=True)
class FtpServerEntry:
    host: str
    port: int
    protocol: TransferProtocol
    raw_protocol: str = ""
    user: Optional[str] = None
    source_file: str = "recentservers_xml"

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")


@dataclass(frozen=True)
class KnownHostEntry:
    host_pattern: str
    port: int
    key_type: str
    key_blob_digest: str
    hashed: bool

    def matches_ip(self, ip: str) -> bool:
        """Exact plaintext match only; hashed entries never match here."""
        if self.hashed:
            return False
        return _plain_host(self.host_pattern) == ip

    @property
    def host(self) -> Optional[str]:
        """Plaintext host when available (None for hashed entries)."""
        return None if self.hashed else _plain_host(self.host_pattern)


def _plain_host(pattern: str) -> str:
    m = re.match(r"\[([^\]]+)\]:(\d+)$", pattern)
    return m.group(1) if m else pattern


def parse_filezilla(xml_text: str, source_file: str = "recentservers_xml") -> tuple[list[FtpServerEntry], list[str]]:
    """Extract server entries from a FileZilla XML document, in file order.

    Reads only the schema-stable elements (Host, Port, Protocol, User) so the
    same code handles recentservers.xml, sitemanager.xml and filezilla.xml
    across versions. A missing Host skips that entry with a warning; malformed
    XML is fatal with the reported line number.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise HostArtifactError(f"XML syntax error at line {line}, column {col}: {exc}") from exc

    entries: list[FtpServerEntry] = []
    warnings: list[str] = []
    for i, server in enumerate(root.iter("Server")):
        host = (server.findtext("Host") or "").strip()
        if not host:
            warnings.append(f"server element #{i + 1} has no Host; skipped")
            continue
        port_text = (server.findtext("Port") or "21").strip()
        try:
            port = int(port_text)
        except ValueError:
            warnings.append(f"server element #{i + 1} has bad port {port_text!r}; skipped")
            continue
        raw_protocol = (server.findtext("Protocol") or "0").strip()
        protocol = _PROTOCOL_CODES.get(raw_protocol) or _PROTOCOL_NAMES.get(
            raw_protocol.lower(), TransferProtocol.OTHER
        )
        user = server.findtext("User")
        try:
            entries.append(FtpServerEntry(host, port, protocol, raw_protocol, user, source_file))
        except ValueError as exc:
            warnings.append(f"server element #{i + 1}: {exc}; skipped")
    return entries, warnings


def parse_known_hosts(text: str) -> tuple[list[KnownHostEntry], list[str]]:
    """Parse OpenSSH known_hosts text, one entry per host pattern.

    Plain patterns default to port 22; "[host]:port" patterns yield the
    embedded port; hashed ("|1|...") patterns are kept with hashed=True and
    are excluded from IP matching. Comma-separated patterns on one line
    become separate entries sharing the key. Malformed lines warn and skip.
    """
    entries: list[KnownHostEntry] = []
    warnings: list[str] = []
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):  # @cert-authority / @revoked marker
            line = line.split(None, 1)[-1]
        fields = line.split()
        if len(fields) < 3:
            warnings.append(f"line {lineno}: fewer than 3 fields; skipped")
            continue
        patterns, key_type, key_blob = fields[0], fields[1], fields[2]
        try:
            blob_digest = hashlib.sha256(base64.b64decode(key_blob, validate=True)).hexdigest()
        except (base64.binascii.Error, ValueError):
            warnings.append(f"line {lineno}: key blob is not valid base64; skipped")
            continue
        if patterns.startswith(HASHED_SENTINEL):
            entries.append(KnownHostEntry(patterns, 22, key_type, blob_digest, hashed=True))
            continue
        for pattern in patterns.split(","):
            m = re.match(r"\[([^\]]+)\]:(\d+)$", pattern)
            port = int(m.group(2)) if m else 22
            if not 1 <= port <= 65535:
                warnings.append(f"line {lineno}: port {port} out of range; skipped")
                continue
            entries.append(KnownHostEntry(pattern, port, key_type, blob_digest, hashed=False))
    return entries, warnings


def hash_host_pattern(host: str, salt: bytes) -> str:
    """Produce the hashed known_hosts pattern OpenSSH writes for `host`."""
    mac = hmac.new(salt, host.encode(), "sha1").digest()
    return HASHED_SENTINEL + base64.b64encode(salt).decode() + "|" + base64.b64encode(mac).decode()


def hashed_entry_matches(entry: KnownHostEntry, host: str) -> bool:
    """Optional resolver: HMAC-check a hashed entry against a candidate host."""
    if not entry.hashed:
        return entry.matches_ip(host)
    try:
        _, version, salt_b64, mac_b64 = entry.host_pattern.split("|")
    except ValueError:
        return False
    if version != "1":
        return False
    expected = base64.b64decode(mac_b64)
    actual = hmac.new(base64.b64decode(salt_b64), host.encode(), "sha1").digest()
    return hmac.compare_digest(expected, actual)


@dataclass
class HostArtifacts:
    """Parsed PC-side artifacts plus the digests of the files they came from."""

    ftp_entries: list[FtpServerEntry] = field(default_factory=list)
    known_host_entries: list[KnownHostEntry] = field(default_factory=list)
    items: list[EvidenceItem] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


_FILEZILLA_NAMES = {"recentservers.xml": "recentservers_xml",
                    "filezilla.xml": "filezilla_xml",
                    "sitemanager.xml": "filezilla_xml"}

_SOURCE_KIND_BY_LABEL = {"recentservers_xml": SourceKind.RECENTSERVERS_XML,
                         "filezilla_xml": SourceKind.FILEZILLA_XML}


def locate_host_artifacts(root: Path) -> list[Path]:
    """Find candidate artifact files under a directory or mounted profile.

    Matches the canonical Windows locations (AppData\\Roaming\\FileZilla\\*.xml,
    .ssh\\known_hosts) as well as the same file names placed directly in the
    directory.
    """
    found: list[Path] = []
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        name = path.name.lower()
        if name in _FILEZILLA_NAMES or name == "known_hosts":
            found.append(path)
    return found


def load_host_artifacts(paths: Iterable[Path], collected_at: Optional[Timestamp] = None) -> HostArtifacts:
    """Parse a set of artifact files, hashing each for evidence citation."""
    out = HostArtifacts()
    for path in paths:
        raw = path.read_bytes()
        name = path.name.lower()
        at = collected_at or Timestamp(0)
        if name in _FILEZILLA_NAMES:
            label = _FILEZILLA_NAMES[name]
            try:
                entries, warnings = parse_filezilla(raw.decode("utf-8", errors="replace"), label)
            except HostArtifactError as exc:
                out.warnings.append(f"{path}: {exc}")
                continue
            out.ftp_entries.extend(entries)
            out.warnings.extend(f"{path}: {w}" for w in warnings)
            out.items.append(EvidenceItem(_SOURCE_KIND_BY_LABEL[label], at, compute_digest(raw), str(path)))
        elif name == "known_hosts":
            entries, warnings = parse_known_hosts(raw.decode("utf-8", errors="replace"))
            out.known_host_entries.extend(entries)
            out.warnings.extend(f"{path}: {w}" for w in warnings)
            out.items.append(EvidenceItem(SourceKind.KNOWN_HOSTS, at, compute_digest(raw), str(path)))
        else:
            out.warnings.append(f"{path}: not a recognized host artifact; skipped")
    return out
