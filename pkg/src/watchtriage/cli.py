"""Command-line front door.

Subcommands compose the pipeline:

  acquire    collect dumps from a device (or canned transcripts) into a bundle
  parse      bundle -> structured JSON for the three dump sources
  correlate  bundle [+ host artifacts] -> findings JSON
  audit      manifests -> watch-policy verdicts
  generate   scenario -> synthetic bundle (+ host artifacts + ground truth)
  report     bundle [+ host artifacts] -> markdown/JSON report
  verify     bundle -> per-item integrity pass/fail

Exit codes gate automation: 0 success with nothing detected, 1 completed
with detections or failed integrity/policy, 2 usage or input errors.
Environment variables prefixed WATCHTRIAGE_ override the matching flags
(e.g. WATCHTRIAGE_BUCKET_SECONDS, WATCHTRIAGE_DISPLAY_ZONE).
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from . import acquisition, correlate, dumpsys, policy, report, simulator
from .evidence import EvidenceItem, SourceKind, Timestamp, verify_bundle
from .host_artifacts import load_host_artifacts, locate_host_artifacts

ENV_PREFIX = "WATCHTRIAGE_"

EXIT_OK = 0
EXIT_DETECTIONS = 1
EXIT_USAGE = 2


def _env(name: str, fallback):
    return os.environ.get(ENV_PREFIX + name, fallback)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _write_output(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _load_bundle_or_fail(path_str: str) -> acquisition.LoadedBundle:
    path = Path(path_str)
    if not path.is_dir():
        raise FileNotFoundError(f"bundle directory not found: {path}")
    loaded = acquisition.read_bundle_dir(path)
    missing = [key for key in (i.key() for i in loaded.bundle.items) if key not in loaded.payloads]
    if missing:
        raise FileNotFoundError(
            "bundle raw files missing for items: " + ", ".join(missing)
        )
    return loaded


def _payload_for(loaded: acquisition.LoadedBundle, kind: SourceKind):
    for item in loaded.bundle.items:
        if item.source_kind == kind and item.key() in loaded.payloads:
            return item, loaded.payloads[item.key()]
    return None, None


def _parse_bundle(loaded: acquisition.LoadedBundle, bucket_seconds: int):
    zone = loaded.display_zone
    warnings: list[str] = []

    item, raw = _payload_for(loaded, SourceKind.USAGESTATS)
    if raw is None:
        raise FileNotFoundError("bundle has no usagestats item")
    capture = Timestamp(item.collected_at.epoch, zone)
    usage_report, w = dumpsys.parse_usagestats(raw.decode("utf-8", errors="replace"), capture)
    warnings.extend(f"usagestats: {x}" for x in w)

    _, raw = _payload_for(loaded, SourceKind.NETSTATS)
    if raw is None:
        raise FileNotFoundError("bundle has no netstats item")
    records, w = dumpsys.parse_netstats(raw.decode("utf-8", errors="replace"), zone)
    warnings.extend(f"netstats: {x}" for x in w)

    _, raw = _payload_for(loaded, SourceKind.NETWORK_STACK)
    if raw is None:
        raise FileNotFoundError("bundle has no network_stack item")
    lease_log, w = dumpsys.parse_network_stack(raw.decode("utf-8", errors="replace"), zone)
    warnings.extend(f"network_stack: {x}" for x in w)

    timeline = correlate.build_timeline(usage_report, records, lease_log, bucket_seconds)
    warnings.extend(timeline.warnings)
    return timeline, warnings


def _correlate_bundle(loaded, host_dir: str | None, rules, bucket_seconds: int):
    timeline, warnings = _parse_bundle(loaded, bucket_seconds)
    sessions = correlate.match_sessions(timeline)

    ftp_entries, kh_entries, host_items = [], [], []
    if host_dir:
        root = Path(host_dir)
        if not root.is_dir():
            raise FileNotFoundError(f"host artifacts directory not found: {root}")
        artifacts = load_host_artifacts(locate_host_artifacts(root))
        ftp_entries = artifacts.ftp_entries
        kh_entries = artifacts.known_host_entries
        host_items = artifacts.items
        warnings.extend(artifacts.warnings)

    findings = correlate.corroborate(sessions, ftp_entries, kh_entries, rules)
    findings = report.attach_evidence_digests(findings, loaded.bundle, host_items)
    return findings, timeline, host_items, warnings


def _rules_from_args(args) -> tuple:
    if getattr(args, "rules", None):
        return correlate.load_rules(Path(args.rules))
    return correlate.DEFAULT_RULES


def _slug(command: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", command)


def cmd_acquire(args) -> int:
    plan = acquisition.load_plan(Path(args.plan)) if args.plan else acquisition.default_plan()
    if args.transcripts:
        root = Path(args.transcripts)
        if not root.is_dir():
            return _fail(f"transcripts directory not found: {root}")
        transcripts = {}
        for step in plan.steps:
            candidate = root / f"{_slug(step.command)}.txt"
            if candidate.is_file():
                transcripts[step.command] = candidate.read_bytes()
        date_file = root / _slug("date +%s")
        if date_file.with_suffix(".txt").is_file():
            transcripts["date +%s"] = date_file.with_suffix(".txt").read_bytes()
        executor = acquisition.FakeExecutor(transcripts)
    else:
        executor = acquisition.AdbShellExecutor(serial=args.serial, adb_path=args.adb_path)
    clock = acquisition.SteppingClock(args.clock_start) if args.clock_start else None
    result = acquisition.run_acquisition(
        executor, plan, clock, origin_label=args.origin, display_zone=args.display_zone
    )
    acquisition.write_bundle_dir(result, Path(args.out))
    print(f"bundle sealed: {result.bundle.bundle_manifest_digest}")
    print(f"items: {len(result.bundle.items)}, failures: {len(result.failures)}")
    for failure in result.failures:
        print(f"  step failed: {failure.label}: {failure.detail}", file=sys.stderr)
    return EXIT_DETECTIONS if result.failures else EXIT_OK


def cmd_parse(args) -> int:
    loaded = _load_bundle_or_fail(args.bundle)
    timeline, warnings = _parse_bundle(loaded, args.bucket_seconds)
    doc = {
        "bundle_manifest_digest": loaded.bundle.bundle_manifest_digest,
        "usagestats": {
            "capture_time": timeline.report.capture_time.epoch,
            "events": [
                {"at": e.at.epoch, "rendered": e.at.render(), "package": e.package, "event_type": e.event_type}
                for e in timeline.report.events_24h
            ],
            "aggregates": [
                {
                    "window": a.window.value,
                    "package": a.package,
                    "last_used": a.last_used.epoch,
                    "use_count": a.use_count,
                    "precision": a.last_used_precision,
                }
                for a in timeline.report.aggregates
            ],
        },
        "netstats": [
            {"network_id": r.network_id, "st": r.st.epoch, "rb": r.rb, "rp": r.rp, "tb": r.tb, "tp": r.tp}
            for r in timeline.records
        ],
        "network_stack": {
            "boot_epoch_marker": timeline.lease_log.boot_epoch_marker.epoch
            if timeline.lease_log.boot_epoch_marker
            else None,
            "leases": [
                {
                    "at": l.at.epoch,
                    "interface": l.interface,
                    "private_ip": l.private_ip,
                    "event_kind": l.event_kind.value,
                    "network_id": l.network_id,
                }
                for l in timeline.lease_log.leases
            ],
        },
        "warnings": warnings,
    }
    _write_output(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_correlate(args) -> int:
    loaded = _load_bundle_or_fail(args.bundle)
    findings, _timeline, _host_items, warnings = _correlate_bundle(
        loaded, args.host_artifacts, _rules_from_args(args), args.bucket_seconds
    )
    doc = correlate.findings_document(
        findings, loaded.bundle.bundle_manifest_digest, args.bucket_seconds, warnings
    )
    _write_output(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_DETECTIONS if findings else EXIT_OK


def cmd_audit(args) -> int:
    device_abi = args.device_abi
    if args.bundle and not device_abi:
        loaded = _load_bundle_or_fail(args.bundle)
        if loaded.bundle.device:
            device_abi = loaded.bundle.device.cpu_abi
    manifests, failures = policy.load_inventory(Path(args.manifests))
    from .evidence import DeviceProfile

    verdicts = policy.audit_inventory(manifests, DeviceProfile(cpu_abi=device_abi or ""))
    verdicts = sorted(verdicts + failures, key=lambda v: (v.severity, v.package))
    if args.format == "json":
        _write_output(
            json.dumps([policy.verdict_to_dict(v) for v in verdicts], indent=2, sort_keys=True) + "\n",
            args.out,
        )
    else:
        _write_output(policy.verdicts_table(verdicts), args.out)
    flagged = [v for v in verdicts if v.verdict != policy.VerdictKind.COMPLIANT]
    return EXIT_DETECTIONS if flagged else EXIT_OK


def cmd_generate(args) -> int:
    if args.preset:
        scenario = simulator.PRESETS[args.preset]()
    elif args.scenario:
        scenario_path = Path(args.scenario)
        if not scenario_path.is_file():
            return _fail(f"scenario file not found: {scenario_path}")
        scenario = simulator.load_scenario(scenario_path)
    else:
        scenario = simulator.random_scenario(args.seed)

    usagestats, netstats, network_stack = simulator.render_dumps(scenario, args.bucket_seconds)
    out = Path(args.out)
    texts = {
        "usagestats": (SourceKind.USAGESTATS, usagestats),
        "netstats": (SourceKind.NETSTATS, netstats),
        "network_stack": (SourceKind.NETWORK_STACK, network_stack),
    }
    items, payloads, labels = [], {}, {}
    for label, (kind, text) in texts.items():
        raw = text.encode()
        item = EvidenceItem.from_bytes(
            kind, raw, Timestamp(scenario.capture_time, scenario.display_zone), "synthetic"
        )
        items.append(item)
        payloads[item.key()] = raw
        labels[item.key()] = label
    from .evidence import seal_bundle

    bundle = seal_bundle(items, payloads=payloads)
    result = acquisition.AcquisitionResult(
        bundle, payloads, labels, [], None, None, scenario.display_zone
    )
    acquisition.write_bundle_dir(result, out)
    (out / "scenario.json").write_text(
        json.dumps(simulator.scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n"
    )
    if scenario.host_side:
        host_dir = out / "host_artifacts"
        host_dir.mkdir(parents=True, exist_ok=True)
        filezilla_xml, known_hosts = simulator.render_host_artifacts(scenario)
        (host_dir / "recentservers.xml").write_text(filezilla_xml)
        if known_hosts:
            (host_dir / "known_hosts").write_text(known_hosts)
    print(f"synthetic bundle written to {out} (digest {bundle.bundle_manifest_digest})")
    return EXIT_OK


def cmd_report(args) -> int:
    loaded = _load_bundle_or_fail(args.bundle)
    findings, timeline, host_items, warnings = _correlate_bundle(
        loaded, args.host_artifacts, _rules_from_args(args), args.bucket_seconds
    )
    doc = report.render_report(
        findings, loaded.bundle, timeline, args.display_zone, host_items, warnings
    )
    if args.format == "json":
        _write_output(json.dumps(doc.to_json_dict(), indent=2, sort_keys=True) + "\n", args.out)
    else:
        _write_output(doc.to_markdown(), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    loaded = _load_bundle_or_fail(args.bundle)
    result = verify_bundle(loaded.bundle, loaded.payloads)
    for item_result in result.results:
        print(f"{item_result.status.upper():8} {item_result.item_key}"
              + (f"  ({item_result.detail})" if item_result.detail else ""))
    print(f"manifest: {'PASS' if result.manifest_ok else 'FAIL'}")
    print(f"overall: {'PASS' if result.overall_pass else 'FAIL'}")
    return EXIT_OK if result.overall_pass else EXIT_DETECTIONS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="watchtriage",
        description="Forensic triage for Wear OS smartwatch dump evidence",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, bundle_required=True):
        p.add_argument("--bundle", required=bundle_required, help="bundle directory")
        p.add_argument(
            "--bucket-seconds",
            type=int,
            default=int(_env("BUCKET_SECONDS", correlate.DEFAULT_BUCKET_SECONDS)),
            help="traffic bucket duration (default 3600)",
        )
        p.add_argument(
            "--display-zone",
            default=_env("DISPLAY_ZONE", "Asia/Seoul"),
            help="IANA zone for rendering timestamps",
        )
        p.add_argument("--out", help="write output to this file instead of stdout")

    p = sub.add_parser("acquire", help="collect evidence from a device into a bundle directory")
    p.add_argument("--serial", help="adb device serial (host:port for wireless)")
    p.add_argument("--adb-path", default=_env("ADB_PATH", "adb"), help="adb binary")
    p.add_argument("--transcripts", help="directory of canned command transcripts (offline mode)")
    p.add_argument("--plan", help="acquisition plan JSON (default: built-in volatility order)")
    p.add_argument("--origin", default="watch", help="origin label recorded on evidence items")
    p.add_argument("--display-zone", default=_env("DISPLAY_ZONE", "Asia/Seoul"))
    p.add_argument("--clock-start", type=int, help="deterministic clock start (testing)")
    p.add_argument("--out", required=True, help="bundle output directory")
    p.set_defaults(func=cmd_acquire)

    p = sub.add_parser("parse", help="parse a bundle's dumps into structured JSON")
    add_common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("correlate", help="correlate a bundle into findings JSON")
    add_common(p)
    p.add_argument("--host-artifacts", default=_env("HOST_ARTIFACTS", None),
                   help="directory of PC-side artifacts (recentservers.xml, known_hosts, ...)")
    p.add_argument("--rules", default=_env("RULES", None), help="pattern rules JSON file")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("audit", help="audit app manifests against the watch-only policy")
    p.add_argument("--manifests", required=True, help="directory of manifests or inventory JSON")
    p.add_argument("--device-abi", help="device CPU ABI (e.g. armeabi-v7a)")
    p.add_argument("--bundle", help="bundle directory to take the device ABI from")
    p.add_argument("--format", choices=["md", "json"], default=_env("FORMAT", "md"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("generate", help="write a synthetic evidence bundle from a scenario")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--preset", choices=sorted(simulator.PRESETS), help="built-in scenario")
    group.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--seed", type=int, default=0, help="seed for a random scenario")
    p.add_argument("--bucket-seconds", type=int, default=int(_env("BUCKET_SECONDS", 3600)))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("report", help="render an investigator report from a bundle")
    add_common(p)
    p.add_argument("--host-artifacts", default=_env("HOST_ARTIFACTS", None))
    p.add_argument("--rules", default=_env("RULES", None))
    p.add_argument("--format", choices=["md", "json"], default=_env("FORMAT", "md"))
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="verify bundle integrity (per-item pass/fail)")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except (
        acquisition.AcquisitionError,
        dumpsys.ParseError,
        policy.ManifestError,
        simulator.ScenarioError,
        json.JSONDecodeError,
        ValueError,  # malformed rules/inventory/scenario values
    ) as exc:
        return _fail(str(exc))
    except KeyError as exc:
        return _fail(f"input file is missing a required field: {exc}")


if __name__ == "__main__":
    sys.exit(main())
