"""Parsers for the three ADB dumpsys text outputs: usagestats, netstats, network_stack.

The dumps are consumed in the line-oriented grammar documented in
docs/fixture-grammar.md, which mirrors the real dumpsys field vocabulary
(time=/type=/package=, networkId, st/rb/rp/tb/tp, DHCP lease lines). Unknown
lines never abort a parse; they are collected as warnings. A JSON-lines
pre-tokenized form of each dump is accepted as well.

Precision semantics preserved from the source services:
  - usagestats events carry second precision and only cover the 24 hours
    before the dump was captured; weekly/monthly/yearly aggregates never
    claim second precision.
  - netstats `st` bucket starts are stored verbatim, with no alignment or
    rounding applied.
  - network_stack is volatile across reboot: lease events predating a boot
    marker are rejected.
"""

from __future__ import annotations

import ipaddress
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .evidence import DEFAULT_DISPLAY_ZONE, TimeBucket, Timestamp, parse_timestamp

USAGE_WINDOW_SECONDS = 24 * 3600


class ParseError(Exception):
    """Fatal parse failure (empty input, missing capture time)."""


class EmptyDumpError(ParseError):
    """Input text is empty or whitespace-only."""


class UsageEventKind(Enum):
    ACTIVITY_RESUMED = "ACTIVITY_RESUMED"
    ACTIVITY_PAUSED = "ACTIVITY_PAUSED"
    FOREGROUND_SERVICE_START = "FOREGROUND_SERVICE_START"
    FOREGROUND_SERVICE_STOP = "FOREGROUND_SERVICE_STOP"
    NOTIFICATION_INTERRUPTION = "NOTIFICATION_INTERRUPTION"
    OTHER = "OTHER"


class AggregateWindow(Enum):
    WEEK = "week"
    MONTH = "month"
    YEAR = "year"


WINDOW_SECONDS = {
    AggregateWindow.WEEK: 7 * 86400,
    AggregateWindow.MONTH: 30 * 86400,
    AggregateWindow.YEAR: 365 * 86400,
}


class LeaseKind(Enum):
    DHCP_ACK = "dhcp_ack"
    LEASE_RENEW = "lease_renew"
    INTERFACE_UP = "interface_up"
    INTERFACE_DOWN = "interface_down"
    OTHER = "other"


_LEASE_TOKEN_MAP = {
    "DHCP_ACK": LeaseKind.DHCP_ACK,
    "LEASE_RENEW": LeaseKind.LEASE_RENEW,
    "IF_UP": LeaseKind.INTERFACE_UP,
    "IF_DOWN": LeaseKind.INTERFACE_DOWN,
}


@dataclass(frozen=True)
class UsageEvent:
    """Second-precision app lifecycle event from the 24h detail window."""

    at: Timestamp
    package: str
    event_type: str  # raw dumpsys token, open vocabulary

    @property
    def kind(self) -> UsageEventKind:
        try:
            return UsageEventKind(self.event_type)
        except ValueError:
            return UsageEventKind.OTHER


@dataclass(frozen=True)
class UsageAggregate:
    """Coarse per-window usage summary; never second-precise."""

    window: AggregateWindow
    package: str
    last_used: Timestamp
    use_count: int
    last_used_precision: str = "minute"

    def __post_init__(self):
        if self.use_count < 0:
            raise ValueError("use_count must be >= 0")
        if self.last_used_precision == "second":
            raise ValueError("aggregates never carry second precision")


@dataclass(frozen=True)
class UsageReport:
    capture_time: Timestamp
    events_24h: tuple[UsageEvent, ...]
    aggregates: tuple[UsageAggregate, ...]


@dataclass(frozen=True)
class NetUsageRecord:
    """Per-network traffic bucket; `st` is stored exactly as reported."""

    network_id: str
    st: Timestamp
    rb: int
    rp: int
    tb: int
    tp: int

    def __post_init__(self):
        for name in ("rb", "rp", "tb", "tp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total_bytes(self) -> int:
        return self.rb + self.tb

    def has_traffic(self) -> bool:
        return (self.rb + self.rp + self.tb + self.tp) > 0


@dataclass(frozen=True)
class LeaseEvent:
    at: Timestamp
    interface: str
    private_ip: str
    event_kind: LeaseKind
    raw_kind: str = ""
    network_id: Optional[str] = None

    def __post_init__(self):
        ipaddress.IPv4Address(self.private_ip)  # raises on non-dotted-quad


@dataclass(frozen=True)
class NetworkStackLog:
    """Volatile DHCP/interface log; empty right after a reboot."""

    leases: tuple[LeaseEvent, ...]
    boot_epoch_marker: Optional[Timestamp] = None


def bucket_for(st: Timestamp, duration: int = 3600) -> TimeBucket:
    """Half-open traffic bucket starting at `st` verbatim."""
    return TimeBucket(st, duration)


def _require_text(text: str):
    if not text or not text.strip():
        raise EmptyDumpError("dump text is empty")


def _is_jsonl(text: str) -> bool:
    head = text.lstrip()
    return head.startswith("{")


_QUOTED = r'"([^"]*)"'
_EVENT_RE = re.compile(r'time=' + _QUOTED + r'\s+type=(\S+)\s+package=(\S+)')
_AGGREGATE_RE = re.compile(r'package=(\S+)\s+lastTimeUsed=' + _QUOTED + r'\s+totalCount=(\d+)')
_CAPTURE_RE = re.compile(r'capture-time=' + _QUOTED)
_NETWORK_ID_RE = re.compile(r'networkId=' + _QUOTED)
_ST_LINE_RE = re.compile(r'st=(\d+)\s+rb=(-?\d+)\s+rp=(-?\d+)\s+tb=(-?\d+)\s+tp=(-?\d+)')
_BOOT_RE = re.compile(r'bootTime=' + _QUOTED)
_LEASE_RE = re.compile(
    r'time=' + _QUOTED + r'\s+iface=(\S+)\s+event=(\S+)\s+ip=(\S+)(?:\s+ssid=' + _QUOTED + r')?'
)

_SECTION_HEADERS = {
    "last 24 hour events:": "events",
    "weekly stats:": AggregateWindow.WEEK,
    "monthly stats:": AggregateWindow.MONTH,
    "yearly stats:": AggregateWindow.YEAR,
}


def parse_usagestats(
    text: str,
    capture_time: Optional[Timestamp] = None,
    zone: str = DEFAULT_DISPLAY_ZONE,
) -> tuple[UsageReport, list[str]]:
    """Parse a usagestats dump into a report plus per-line warnings.

    `capture_time` normally comes from acquisition metadata; when omitted, a
    capture-time= header inside the dump is used. Events outside the 24-hour
    detail window ending at the capture time are dropped with a warning.
    """
    _require_text(text)
    if capture_time is not None:
        zone = capture_time.zone
    if _is_jsonl(text):
        return _parse_usagestats_jsonl(text, capture_time, zone)

    warnings: list[str] = []
    events: list[UsageEvent] = []
    aggregates: list[UsageAggregate] = []
    section = None

    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("DUMP OF SERVICE"):
            continue
        header = _SECTION_HEADERS.get(line.lower())
        if header is not None:
            section = header
            continue
        m = _CAPTURE_RE.search(line)
        if m:
            if capture_time is None:
                capture_time = parse_timestamp(m.group(1), zone)
            continue
        m = _EVENT_RE.search(line)
        if m:
            try:
                at = parse_timestamp(m.group(1), zone)
            except ValueError as exc:
                warnings.append(f"line {lineno}: bad event time ({exc})")
                continue
            events.append(UsageEvent(at, m.group(3), m.group(2)))
            continue
        m = _AGGREGATE_RE.search(line)
        if m and isinstance(section, AggregateWindow):
            try:
                last_used = parse_timestamp(m.group(2) + ":00", zone)
            except ValueError as exc:
                warnings.append(f"line {lineno}: bad aggregate time ({exc})")
                continue
            aggregates.append(UsageAggregate(section, m.group(1), last_used, int(m.group(3))))
            continue
        warnings.append(f"line {lineno}: unrecognized: {line[:80]}")

    if capture_time is None:
        raise ParseError("capture time required: pass capture_time or include a capture-time= header")

    kept = []
    window_start = capture_time.epoch - USAGE_WINDOW_SECONDS
    for ev in events:
        if ev.at.epoch < window_start or ev.at.epoch > capture_time.epoch:
            warnings.append(
                f"event for {ev.package} at {ev.at.render()} lies outside the 24h detail window; dropped"
            )
        else:
            kept.append(ev)
    kept.sort(key=lambda e: e.at.epoch)  # stable: ties keep input order
    return UsageReport(capture_time, tuple(kept), tuple(aggregates)), warnings


def _parse_usagestats_jsonl(
    text: str, capture_time: Optional[Timestamp], zone: str
) -> tuple[UsageReport, list[str]]:
    warnings: list[str] = []
    events: list[UsageEvent] = []
    aggregates: list[UsageAggregate] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            record = obj.get("record")
            if record == "capture":
                if capture_time is None:
                    capture_time = Timestamp(int(obj["at"]), zone)
            elif record == "event":
                events.append(UsageEvent(Timestamp(int(obj["at"]), zone), obj["package"], obj["event_type"]))
            elif record == "aggregate":
                aggregates.append(
                    UsageAggregate(
                        AggregateWindow(obj["window"]),
                        obj["package"],
                        Timestamp(int(obj["last_used"]), zone),
                        int(obj["use_count"]),
                    )
                )
            else:
                warnings.append(f"line {lineno}: unknown record kind {record!r}")
        except (KeyError, ValueError, TypeError) as exc:
            warnings.append(f"line {lineno}: {exc}")
    if capture_time is None:
        raise ParseError("capture time required: pass capture_time or include a capture record")
    kept = []
    window_start = capture_time.epoch - USAGE_WINDOW_SECONDS
    for ev in events:
        if ev.at.epoch < window_start or ev.at.epoch > capture_time.epoch:
            warnings.append(
                f"event for {ev.package} at {ev.at.render()} lies outside the 24h detail window; dropped"
            )
        else:
            kept.append(ev)
    kept.sort(key=lambda e: e.at.epoch)
    return UsageReport(capture_time, tuple(kept), tuple(aggregates)), warnings


def parse_netstats(
    text: str, zone: str = DEFAULT_DISPLAY_ZONE
) -> tuple[list[NetUsageRecord], list[str]]:
    """Parse a netstats dump into traffic bucket records, order preserved."""
    _require_text(text)
    warnings: list[str] = []
    records: list[NetUsageRecord] = []

    if _is_jsonl(text):
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(
                    NetUsageRecord(
                        obj["network_id"],
                        Timestamp(int(obj["st"]), zone),
                        int(obj["rb"]),
                        int(obj["rp"]),
                        int(obj["tb"]),
                        int(obj["tp"]),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                warnings.append(f"line {lineno}: {exc}")
        return records, warnings

    current_network: Optional[str] = None
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("DUMP OF SERVICE"):
            continue
        if line.endswith("stats:") or line.startswith("NetworkStatsHistory"):
            continue
        m = _NETWORK_ID_RE.search(line)
        if m:
            current_network = m.group(1)
            continue
        m = _ST_LINE_RE.search(line)
        if m:
            if current_network is None:
                warnings.append(f"line {lineno}: counter line before any networkId")
                continue
            counters = [int(g) for g in m.groups()[1:]]
            if any(c < 0 for c in counters):
                warnings.append(f"line {lineno}: negative counter; dropped")
                continue
            records.append(
                NetUsageRecord(current_network, Timestamp(int(m.group(1)), zone), *counters)
            )
            continue
        warnings.append(f"line {lineno}: unrecognized: {line[:80]}")
    return records, warnings


def parse_network_stack(
    text: str, zone: str = DEFAULT_DISPLAY_ZONE
) -> tuple[NetworkStackLog, list[str]]:
    """Parse a network_stack dump into DHCP lease events plus boot marker.

    Lease lines predating the boot marker are rejected with a warning: the
    service log does not survive a reboot, so such lines cannot be genuine.
    """
    _require_text(text)
    warnings: list[str] = []
    leases: list[LeaseEvent] = []
    boot: Optional[Timestamp] = None

    if _is_jsonl(text):
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if obj.get("record") == "boot":
                    boot = Timestamp(int(obj["at"]), zone)
                elif obj.get("record") == "lease":
                    leases.append(
                        LeaseEvent(
                            Timestamp(int(obj["at"]), zone),
                            obj.get("interface", "wlan0"),
                            obj["private_ip"],
                            LeaseKind(obj.get("event_kind", "dhcp_ack")),
                            obj.get("event_kind", "dhcp_ack"),
                            obj.get("network_id"),
                        )
                    )
                else:
                    warnings.append(f"line {lineno}: unknown record kind")
            except (KeyError, ValueError, TypeError, ipaddress.AddressValueError) as exc:
                warnings.append(f"line {lineno}: {exc}")
    else:
        for lineno, raw_line in enumerate(text.splitlines(), 1):
            line = raw_line.strip()
            if not line or line.startswith("DUMP OF SERVICE"):
                continue
            m = _BOOT_RE.search(line)
            if m:
                try:
                    boot = parse_timestamp(m.group(1), zone)
                except ValueError as exc:
                    warnings.append(f"line {lineno}: bad boot time ({exc})")
                continue
            m = _LEASE_RE.search(line)
            if m:
                token = m.group(3)
                kind = _LEASE_TOKEN_MAP.get(token, LeaseKind.OTHER)
                try:
                    leases.append(
                        LeaseEvent(parse_timestamp(m.group(1), zone), m.group(2), m.group(4), kind, token, m.group(5))
                    )
                except (ValueError, ipaddress.AddressValueError) as exc:
                    warnings.append(f"line {lineno}: bad lease line ({exc})")
                continue
            warnings.append(f"line {lineno}: unrecognized: {line[:80]}")

    if boot is not None:
        kept = []
        for lease in leases:
            if lease.at.epoch < boot.epoch:
                warnings.append(
                    f"lease at {lease.at.render()} predates boot marker {boot.render()}; dropped "
                    "(log is volatile across reboot)"
                )
            else:
                kept.append(lease)
        leases = kept
    leases.sort(key=lambda l: l.at.epoch)
    return NetworkStackLog(tuple(leases), boot), warnings
