import pytest

from watchtriage import correlate, dumpsys, host_artifacts, simulator
from watchtriage.evidence import Timestamp


def run_pipeline(scenario, with_host=True, rules=correlate.DEFAULT_RULES, bucket_seconds=3600):
    """Render a scenario, parse it back, correlate, and return all stages."""
    usagestats, netstats, network_stack = simulator.render_dumps(scenario, bucket_seconds)
    report, w1 = dumpsys.parse_usagestats(
        usagestats, Timestamp(scenario.capture_time, scenario.display_zone)
    )
    records, w2 = dumpsys.parse_netstats(netstats, scenario.display_zone)
    lease_log, w3 = dumpsys.parse_network_stack(network_stack, scenario.display_zone)
    timeline = correlate.build_timeline(report, records, lease_log, bucket_seconds)
    sessions = correlate.match_sessions(timeline)
    ftp_entries, kh_entries = [], []
    if with_host:
        filezilla_xml, known_hosts = simulator.render_host_artifacts(scenario)
        ftp_entries, _ = host_artifacts.parse_filezilla(filezilla_xml)
        kh_entries, _ = host_artifacts.parse_known_hosts(known_hosts)
    findings = correlate.corroborate(sessions, ftp_entries, kh_entries, rules)
    return {
        "report": report,
        "records": records,
        "lease_log": lease_log,
        "timeline": timeline,
        "sessions": sessions,
        "findings": findings,
        "warnings": w1 + w2 + w3,
    }


@pytest.fixture
def pipeline():
    return run_pipeline
