"""Host-mode transmitter: drive real processor workload from a schedule.

A coordinator thread walks the waveform segments on a monotonic clock
and toggles a shared busy flag; n-2 worker threads loop a small dense
matrix multiply while the flag is set and sleep otherwise.  The matmul
runs in BLAS with the GIL released, so the workers genuinely occupy
separate cores while two cores stay free for the rest of the system.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .codec import WaveformSchedule
from .errors import SchedulingError

DEFAULT_MATRIX_DIM = 64
DEFAULT_TOGGLE_RESOLUTION_S = 0.01


@dataclass(frozen=True)
class LoadPlan:
    schedule: WaveformSchedule
    worker_count: int
    matrix_dim: int = DEFAULT_MATRIX_DIM
    toggle_resolution_s: float = DEFAULT_TOGGLE_RESOLUTION_S

    def __post_init__(self):
        if self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")
        if self.matrix_dim < 2:
            raise ValueError("matrix_dim must be at least 2")
        if self.toggle_resolution_s <= 0:
            raise ValueError("toggle_resolution_s must be positive")
        if self.schedule.segments:
            shortest = min(d for d, _ in self.schedule.segments)
            if self.toggle_resolution_s > shortest / 4 + 1e-12:
                raise ValueError(
                    f"toggle_resolution_s {self.toggle_resolution_s} exceeds a quarter of the "
                    f"shortest segment ({shortest})")


def plan_from_schedule(schedule: WaveformSchedule, n_cores: int,
                       matrix_dim: int = DEFAULT_MATRIX_DIM,
                       toggle_resolution_s: float = DEFAULT_TOGGLE_RESOLUTION_S) -> LoadPlan:
    """Build a plan with n-2 workers (floor 1), leaving cores for the OS."""
    if n_cores < 1:
        raise ValueError("n_cores must be at least 1")
    resolution = toggle_resolution_s
    if schedule.segments:
        shortest = min(d for d, _ in schedule.segments)
        resolution = min(resolution, shortest / 4)
    return LoadPlan(
        schedule=schedule,
        worker_count=max(1, n_cores - 2),
        matrix_dim=matrix_dim,
        toggle_resolution_s=resolution,
    )


@dataclass
class RunReport:
    segments_executed: int
    boundary_errors_s: list[float]
    started_at_s: float
    finished_at_s: float
    aborted: bool = False

    @property
    def duration_s(self) -> float:
        return self.finished_at_s - self.started_at_s


class LoadRun:
    """Handle for one in-flight transmission; not reentrant."""

    def __init__(self, plan: LoadPlan, start_at: float | None = None,
                 wall_clock=time.time):
        self._plan = plan
        self._wall_clock = wall_clock
        self._busy = threading.Event()
        self._stop = threading.Event()
        self._done = threading.Event()
        self._report: RunReport | None = None
        now = wall_clock()
        if start_at is None:
            start_at = now + 2 * plan.toggle_resolution_s
        if start_at < now - plan.toggle_resolution_s:
            raise SchedulingError(f"start_at {start_at} is already past (now {now})")
        self._start_at = start_at
        self._workers = [
            threading.Thread(target=self._worker_loop, name=f"loadgen-worker-{i}", daemon=True)
            for i in range(plan.worker_count)
        ]
        self._coordinator = threading.Thread(target=self._coordinate,
                                             name="loadgen-coordinator", daemon=True)
        if plan.schedule.segments:
            for t in self._workers:
                t.start()
        self._coordinator.start()

    def _worker_loop(self) -> None:
        dim = self._plan.matrix_dim
        rng = np.random.default_rng(threading.get_ident() & 0xFFFF)
        a = rng.random((dim, dim))
        b = rng.random((dim, dim))
        idle = self._plan.toggle_resolution_s
        while not self._stop.is_set():
            if self._busy.is_set():
                a = a @ b
                # Renormalize so values stay finite over long runs.
                a /= np.abs(a).max() + 1e-30
            else:
                time.sleep(idle)

    def _coordinate(self) -> None:
        plan = self._plan
        resolution = plan.toggle_resolution_s
        t0 = time.monotonic()
        boundary_errors: list[float] = []
        executed = 0
        aborted = False
        try:
            # Wait out the wall-clock lead-in, polling for aborts.
            while not self._stop.is_set():
                remaining = self._start_at - self._wall_clock()
                if remaining <= 0:
                    break
                time.sleep(min(remaining, resolution))
            t0 = time.monotonic()
            elapsed_target = 0.0
            for duration, load in plan.schedule.segments:
                if self._stop.is_set():
                    break
                if load >= 0.5:
                    self._busy.set()
                else:
                    self._busy.clear()
                boundary_errors.append((time.monotonic() - t0) - elapsed_target)
                elapsed_target += duration
                while not self._stop.is_set():
                    remaining = elapsed_target - (time.monotonic() - t0)
                    if remaining <= 0:
                        break
                    time.sleep(min(remaining, resolution))
                executed += 1
            aborted = self._stop.is_set()
        finally:
            self._busy.clear()
            self._stop.set()
            for t in self._workers:
                if t.ident is not None:
                    t.join(timeout=10 * resolution + 1.0)
            self._report = RunReport(
                segments_executed=executed,
                boundary_errors_s=boundary_errors,
                started_at_s=t0,
                finished_at_s=time.monotonic(),
                aborted=aborted,
            )
            self._done.set()

    def abort(self) -> None:
        """Signal all workers to stop; idempotent, no-op once finished."""
        self._stop.set()
        self._done.wait()

    def wait(self, timeout: float | None = None) -> RunReport:
        if not self._done.wait(timeout):
            raise TimeoutError("load run did not finish in time")
        assert self._report is not None
        return self._report


def start(plan: LoadPlan, start_at: float | None = None) -> LoadRun:
    return LoadRun(plan, start_at)


def execute(plan: LoadPlan, start_at: float | None = None) -> RunReport:
    """Run the plan to completion and return its timing report."""
    return start(plan, start_at).wait()


def abort(handle: LoadRun) -> None:
    handle.abort()
