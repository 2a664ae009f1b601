"""CSV import/export for workload traces.

Format: header ``time_s,value,metric`` followed by one row per sample.
The same format is emitted by simulated and host-sensed traces.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .codec import Metric, WorkloadTrace
from .errors import ConfigError

TRACE_HEADER = ["time_s", "value", "metric"]


def trace_to_csv(trace: WorkloadTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for t, v in zip(trace.times, trace.samples):
        writer.writerow([repr(float(t)), repr(float(v)), trace.metric.value])
    return buf.getvalue()


def write_trace_csv(trace: WorkloadTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trace_to_csv(trace))


def read_trace_csv(path) -> WorkloadTrace:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(TRACE_HEADER)}, got {header}")
        times: list[float] = []
        values: list[float] = []
        metrics: set[str] = set()
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ConfigError(f"{path}: malformed row {row!r}")
            times.append(float(row[0]))
            values.append(float(row[1]))
            metrics.add(row[2])
    if not times:
        raise ConfigError(f"{path}: trace file holds no samples")
    if len(metrics) != 1:
        raise ConfigError(f"{path}: trace mixes metrics {sorted(metrics)}")
    try:
        metric = Metric(metrics.pop())
    except ValueError as exc:
        raise ConfigError(f"{path}: unknown metric: {exc}") from exc
    t = np.asarray(times)
    if len(t) > 1:
        spacing = np.diff(t)
        mean_dt = float(spacing.mean())
        if mean_dt <= 0 or np.any(np.abs(spacing - mean_dt) > 1e-6 * max(1.0, abs(mean_dt))):
            raise ConfigError(f"{path}: sample spacing is not uniform")
        rate = 1.0 / mean_dt
    else:
        rate = 1.0
    return WorkloadTrace(metric=metric, sample_rate_hz=rate,
                         samples=np.asarray(values), start_time_s=float(t[0]))
