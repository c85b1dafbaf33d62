"""Live evidence collection through an abstract command executor.

The watches expose ADB only over wireless debugging, so acquisition is a
sequence of shell commands run through a CommandExecutor. The default plan
collects the most reboot-fragile service first (network_stack), then the
other dumps, then device properties. Raw stdout is stored byte-for-byte and
hashed into the evidence bundle; nothing is transformed before hashing.

No step may require elevated privileges: plans containing `su` or paths
under /data/data are rejected outright.

The executor is replaceable by a canned-transcript fake, which is how every
test (and the offline demo) runs; a thin adapter shells out to an external
adb binary for real devices. Timestamps come from the investigator machine's
clock, never the device's; the device-vs-host offset is measured once with
`date` and recorded as bundle metadata.
"""

from __future__ import annotations

import json
import re
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol, Sequence

from .evidence import (
    DeviceProfile,
    EvidenceBundle,
    EvidenceItem,
    SourceKind,
    Timestamp,
    canonical_json_bytes,
    seal_bundle,
)

Clock = Callable[[], int]


class AcquisitionError(Exception):
    pass


class ExecutorUnreachableError(AcquisitionError):
    """The debug bridge could not be reached at all."""


class CommandExecutor(Protocol):
    def execute(self, command: str) -> tuple[int, bytes, bytes]:
        """Run a shell command on the device; (exit_status, stdout, stderr)."""
        ...


class FakeExecutor:
    """Canned-transcript executor for tests and offline demos."""

    def __init__(self, transcripts: Mapping[str, bytes], unreachable: bool = False,
                 failing: Sequence[str] = ()):
        self.transcripts = dict(transcripts)
        self.unreachable = unreachable
        self.failing = set(failing)
        self.executed: list[str] = []

    def execute(self, command: str) -> tuple[int, bytes, bytes]:
        if self.unreachable:
            raise ExecutorUnreachableError("fake executor configured unreachable")
        self.executed.append(command)
        if command in self.failing:
            return 1, b"", b"simulated failure"
        if command not in self.transcripts:
            return 127, b"", f"no transcript for {command!r}".encode()
        return 0, self.transcripts[command], b""


class AdbShellExecutor:
    """Thin adapter shelling out to an external adb binary."""

    def __init__(self, serial: Optional[str] = None, adb_path: str = "adb", timeout: int = 60):
        self.serial = serial
        self.adb_path = adb_path
        self.timeout = timeout
        if shutil.which(adb_path) is None:
            raise ExecutorUnreachableError(f"adb binary not found: {adb_path}")

    def execute(self, command: str) -> tuple[int, bytes, bytes]:
        argv = [self.adb_path]
        if self.serial:
            argv += ["-s", self.serial]
        argv += ["shell", command]
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExecutorUnreachableError(f"adb invocation failed: {exc}") from exc
        return proc.returncode, proc.stdout, proc.stderr


@dataclass(frozen=True)
class AcquisitionStep:
    label: str
    command: str
    volatility_rank: int
    source_kind: SourceKind


@dataclass(frozen=True)
class AcquisitionPlan:
    steps: tuple[AcquisitionStep, ...]

    def __post_init__(self):
        ranks = [s.volatility_rank for s in self.steps]
        if ranks != sorted(ranks):
            raise ValueError("plan steps must be ordered by ascending volatility rank")
        labels = [s.label for s in self.steps]
        if len(labels) != len(set(labels)):
            raise ValueError("plan step labels must be unique")
        for step in self.steps:
            _reject_privileged(step.command)

    def to_dict(self) -> dict:
        return {
            "steps": [
                {
                    "label": s.label,
                    "command": s.command,
                    "volatility_rank": s.volatility_rank,
                    "source_kind": s.source_kind.value,
                }
                for s in self.steps
            ]
        }


_PRIVILEGED = re.compile(r"(^|[;&|\s])su($|\s)|/data/data")


def _reject_privileged(command: str):
    if _PRIVILEGED.search(command):
        raise ValueError(f"command requires elevated privileges and is not allowed: {command!r}")


def default_plan() -> AcquisitionPlan:
    """Volatility-ordered collection: the reboot-fragile lease log comes first."""
    steps = (
        AcquisitionStep("network_stack", "dumpsys network_stack", 0, SourceKind.NETWORK_STACK),
        AcquisitionStep("netstats", "dumpsys netstats", 1, SourceKind.NETSTATS),
        AcquisitionStep("usagestats", "dumpsys usagestats", 2, SourceKind.USAGESTATS),
        AcquisitionStep("android_version", "getprop ro.build.version.release", 3, SourceKind.GETPROP),
        AcquisitionStep("cpu_abi", "getprop ro.product.cpu.abi", 4, SourceKind.GETPROP),
        AcquisitionStep("model", "getprop ro.product.model", 5, SourceKind.GETPROP),
        AcquisitionStep("host_name", "getprop net.hostname", 6, SourceKind.GETPROP),
    )
    return AcquisitionPlan(steps)


def save_plan(plan: AcquisitionPlan, path: Path):
    Path(path).write_text(json.dumps(plan.to_dict(), indent=2) + "\n")


def load_plan(path: Path) -> AcquisitionPlan:
    data = json.loads(Path(path).read_text())
    return AcquisitionPlan(
        tuple(
            AcquisitionStep(s["label"], s["command"], int(s["volatility_rank"]), SourceKind(s["source_kind"]))
            for s in data["steps"]
        )
    )


@dataclass(frozen=True)
class StepFailure:
    label: str
    detail: str


@dataclass
class AcquisitionResult:
    bundle: EvidenceBundle
    payloads: dict[str, bytes]  # item key -> raw stdout bytes
    labels: dict[str, str]  # item key -> step label
    failures: list[StepFailure]
    device: Optional[DeviceProfile]
    clock_offset_seconds: Optional[int]
    display_zone: str


def run_acquisition(
    executor: CommandExecutor,
    plan: Optional[AcquisitionPlan] = None,
    clock: Optional[Clock] = None,
    origin_label: str = "watch",
    display_zone: str = "Asia/Seoul",
    measure_clock_offset: bool = True,
) -> AcquisitionResult:
    """Run every plan step, hashing raw stdout into an evidence bundle.

    A per-step failure (nonzero exit, missing transcript) is recorded and the
    remaining steps still run; only an unreachable executor aborts. Item
    timestamps are forced strictly monotonic so repeated getprop items stay
    distinguishable in the manifest.
    """
    import time as _time

    plan = plan or default_plan()
    clock = clock or (lambda: int(_time.time()))

    items: list[EvidenceItem] = []
    payloads: dict[str, bytes] = {}
    labels: dict[str, str] = {}
    failures: list[StepFailure] = []
    prop_values: dict[str, str] = {}
    last_at = -1

    for i, step in enumerate(plan.steps):
        try:
            status, stdout, stderr = executor.execute(step.command)
        except ExecutorUnreachableError:
            if i == 0:
                raise
            failures.append(StepFailure(step.label, "executor became unreachable"))
            continue
        at = max(clock(), last_at + 1)
        last_at = at
        if status != 0:
            failures.append(
                StepFailure(step.label, f"exit status {status}: {stderr.decode(errors='replace').strip()}")
            )
            continue
        item = EvidenceItem.from_bytes(step.source_kind, stdout, Timestamp(at, display_zone), origin_label)
        items.append(item)
        payloads[item.key()] = stdout
        labels[item.key()] = step.label
        if step.source_kind == SourceKind.GETPROP:
            prop_values[step.label] = stdout.decode(errors="replace").strip()

    # A live-acquisition profile must carry the CPU ABI; without it the
    # policy audit cannot trust the profile, so none is recorded.
    device = None
    if prop_values.get("cpu_abi"):
        device = DeviceProfile(
            model_number=prop_values.get("model", ""),
            android_version=prop_values.get("android_version", ""),
            cpu_abi=prop_values["cpu_abi"],
            adb_host_name=prop_values.get("host_name", ""),
        )

    offset = None
    if measure_clock_offset:
        try:
            status, stdout, _ = executor.execute("date +%s")
            if status == 0 and stdout.strip().isdigit():
                offset = int(stdout.strip()) - clock()
        except ExecutorUnreachableError:
            pass

    if not items:
        raise AcquisitionError("every acquisition step failed; nothing to seal")
    bundle = seal_bundle(items, device, payloads=payloads)
    return AcquisitionResult(bundle, payloads, labels, failures, device, offset, display_zone)


class SteppingClock:
    """Deterministic clock for reproducible acquisitions."""

    def __init__(self, start: int, step: int = 1):
        self.now = start
        self.step = step

    def __call__(self) -> int:
        current = self.now
        self.now += self.step
        return current


# --- Bundle directory layout -------------------------------------------------
#
# <out>/manifest.json   canonical manifest + digest + file map + extras
# <out>/raw/<label>.txt exact bytes of each step's stdout


def write_bundle_dir(result: AcquisitionResult, out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    (out_dir / "raw").mkdir(parents=True, exist_ok=True)
    files = {}
    for key, raw in result.payloads.items():
        label = result.labels[key]
        rel = f"raw/{label}.txt"
        (out_dir / rel).write_bytes(raw)
        files[key] = rel
    doc = {
        "manifest": result.bundle.manifest_document(),
        "bundle_manifest_digest": result.bundle.bundle_manifest_digest,
        "hash_algorithm": result.bundle.hash_algorithm,
        "files": files,
        "failures": [{"label": f.label, "detail": f.detail} for f in result.failures],
        "clock_offset_seconds": result.clock_offset_seconds,
        "display_zone": result.display_zone,
    }
    (out_dir / "manifest.json").write_bytes(canonical_json_bytes(doc) + b"\n")
    return out_dir


@dataclass
class LoadedBundle:
    bundle: EvidenceBundle
    payloads: dict[str, bytes]
    labels: dict[str, str]
    display_zone: str
    manifest_path: Path


def read_bundle_dir(path: Path) -> LoadedBundle:
    """Load a bundle directory; payloads are read from the file map."""
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise AcquisitionError(f"no manifest.json under {path}")
    doc = json.loads(manifest_path.read_text())
    manifest = doc["manifest"]
    zone = doc.get("display_zone", "Asia/Seoul")
    items = tuple(
        EvidenceItem(
            SourceKind(i["source_kind"]),
            Timestamp(int(i["collected_at"]), zone),
            i["raw_bytes_digest"],
            i.get("origin_label", ""),
        )
        for i in manifest["items"]
    )
    device = None
    if manifest.get("device"):
        device = DeviceProfile(**manifest["device"])
    bundle = EvidenceBundle(
        items, device, doc["bundle_manifest_digest"], doc.get("hash_algorithm", "sha256")
    )
    payloads = {}
    labels = {}
    for key, rel in doc.get("files", {}).items():
        file_path = path / rel
        if file_path.is_file():
            payloads[key] = file_path.read_bytes()
        labels[key] = Path(rel).stem
    return LoadedBundle(bundle, payloads, labels, zone, manifest_path)
