"""Host-mode workload sensing from the kernel's synthetic files.

Reads the aggregate processor-time counters (``/proc/stat`` format) and
the per-core cpufreq files to produce the same :class:`WorkloadTrace`
values as the simulator.  Source paths are parameters so the whole
module runs against fixture directories without privileged access.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import Metric, WorkloadTrace
from .errors import (
    CounterWrapError,
    InsufficientDataError,
    ProcStatParseError,
    SensorAccessError,
)

_STAT_FIELDS = ("user", "nice", "system", "idle", "iowait", "irq", "softirq", "steal")


@dataclass(frozen=True)
class ProcStatSnapshot:
    """Aggregate cumulative tick counters (10 ms units) at one instant."""

    user: int
    nice: int
    system: int
    idle: int
    iowait: int = 0
    irq: int = 0
    softirq: int = 0
    steal: int = 0
    capture_time_s: float = 0.0

    @property
    def total(self) -> int:
        return sum(getattr(self, f) for f in _STAT_FIELDS)


@dataclass(frozen=True)
class CpuFreqReading:
    """Per-core current and maximum clock rates (same unit for both)."""

    current_hz: tuple[int, ...]
    max_hz: tuple[int, ...]

    def __post_init__(self):
        if len(self.current_hz) == 0:
            raise ValueError("reading must cover at least one core")
        if len(self.current_hz) != len(self.max_hz):
            raise ValueError("current_hz and max_hz must have the same core count")
        for cur, mx in zip(self.current_hz, self.max_hz):
            if mx <= 0 or cur <= 0 or cur > mx:
                raise ValueError(f"need 0 < current ({cur}) <= max ({mx}) per core")


def parse_proc_stat(text: str, capture_time_s: float = 0.0) -> ProcStatSnapshot:
    """Extract the aggregate ``cpu`` line; missing trailing fields default to 0."""
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0] != "cpu":
            continue
        fields = parts[1:]
        if len(fields) < 4:
            raise ProcStatParseError(
                f"aggregate cpu line needs at least 4 fields, got {len(fields)}: {line!r}")
        values = []
        for raw in fields[: len(_STAT_FIELDS)]:
            try:
                value = int(raw)
            except ValueError as exc:
                raise ProcStatParseError(f"non-integer counter {raw!r} in line {line!r}") from exc
            if value < 0:
                raise ProcStatParseError(f"negative counter {value} in line {line!r}")
            values.append(value)
        values += [0] * (len(_STAT_FIELDS) - len(values))
        return ProcStatSnapshot(*values, capture_time_s=capture_time_s)
    raise ProcStatParseError("no aggregate 'cpu' line found")


def time_load_between(a: ProcStatSnapshot, b: ProcStatSnapshot) -> float:
    """Busy fraction between two snapshots: (total - idle - iowait) / total."""
    deltas = {f: getattr(b, f) - getattr(a, f) for f in _STAT_FIELDS}
    wrapped = [f for f, d in deltas.items() if d < 0]
    if wrapped:
        raise CounterWrapError(f"counters went backwards: {', '.join(wrapped)}")
    total = sum(deltas.values())
    if total == 0:
        raise InsufficientDataError("no processor ticks elapsed between snapshots")
    busy = total - deltas["idle"] - deltas["iowait"]
    return min(max(busy / total, 0.0), 1.0)


def frequency_load(reading: CpuFreqReading) -> float:
    """Load frequency ratio: mean over cores of current/max clock rate."""
    ratios = [cur / mx for cur, mx in zip(reading.current_hz, reading.max_hz)]
    return sum(ratios) / len(ratios)


@dataclass(frozen=True)
class SensorPaths:
    proc_stat: Path = Path("/proc/stat")
    cpu_sysfs_root: Path = Path("/sys/devices/system/cpu")


def _read_text(path: Path) -> str:
    try:
        return path.read_text()
    except (FileNotFoundError, PermissionError, OSError) as exc:
        raise SensorAccessError(path, str(exc)) from exc


def read_proc_stat(paths: SensorPaths, clock=time.monotonic) -> ProcStatSnapshot:
    return parse_proc_stat(_read_text(paths.proc_stat), capture_time_s=clock())


def read_cpufreq(paths: SensorPaths) -> CpuFreqReading:
    """Read scaling_cur_freq / scaling_max_freq per core.

    Falls back to cpuinfo_max_freq when scaling_max_freq is absent.
    """
    root = paths.cpu_sysfs_root
    try:
        cpu_dirs = sorted(
            (d for d in root.iterdir() if d.name.startswith("cpu") and d.name[3:].isdigit()),
            key=lambda d: int(d.name[3:]),
        )
    except (FileNotFoundError, PermissionError, OSError) as exc:
        raise SensorAccessError(root, str(exc)) from exc
    current, maximum = [], []
    for cpu_dir in cpu_dirs:
        freq_dir = cpu_dir / "cpufreq"
        if not freq_dir.is_dir():
            continue
        cur = int(_read_text(freq_dir / "scaling_cur_freq").strip())
        max_path = freq_dir / "scaling_max_freq"
        if not max_path.exists():
            max_path = freq_dir / "cpuinfo_max_freq"
        mx = int(_read_text(max_path).strip())
        current.append(cur)
        maximum.append(mx)
    if not current:
        raise SensorAccessError(root, "no cpu*/cpufreq directories found")
    return CpuFreqReading(current_hz=tuple(current), max_hz=tuple(maximum))


def run_sampler(metric: Metric, sample_rate_hz: float, duration_s: float,
                paths: SensorPaths | None = None, clock=time.monotonic,
                sleep=time.sleep) -> WorkloadTrace:
    """Sample the host workload at a fixed cadence on a monotonic clock.

    Time-load samples span each interval with back-to-back snapshots;
    frequency-load samples are instantaneous reads at each tick.
    """
    if not math.isfinite(sample_rate_hz) or sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if duration_s < 0:
        raise ValueError("duration_s must be nonnegative")
    paths = paths or SensorPaths()
    n = int(math.ceil(duration_s * sample_rate_hz))
    if n == 0:
        return WorkloadTrace(metric=metric, sample_rate_hz=sample_rate_hz,
                             samples=np.empty(0))
    interval = 1.0 / sample_rate_hz
    start = clock()
    samples = np.empty(n)
    if metric is Metric.TIME_LOAD:
        prev = read_proc_stat(paths, clock)
        for i in range(n):
            _sleep_until(start + (i + 1) * interval, clock, sleep)
            snap = read_proc_stat(paths, clock)
            try:
                samples[i] = time_load_between(prev, snap)
            except InsufficientDataError:
                # Interval shorter than the kernel tick: carry the last value.
                samples[i] = samples[i - 1] if i else 0.0
            prev = snap
    else:
        for i in range(n):
            _sleep_until(start + i * interval, clock, sleep)
            samples[i] = frequency_load(read_cpufreq(paths))
    return WorkloadTrace(metric=metric, sample_rate_hz=sample_rate_hz, samples=samples)


def _sleep_until(target: float, clock, sleep) -> None:
    while True:
        remaining = target - clock()
        if remaining <= 0:
            return
        sleep(min(remaining, 0.05))
