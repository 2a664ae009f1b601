"""Host sensing tests: stat parsing, load formulas, fixture-backed sampling."""

import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadlink.codec import Metric
from loadlink.errors import (
    CounterWrapError,
    InsufficientDataError,
    ProcStatParseError,
    SensorAccessError,
)
from loadlink.sysload import (
    CpuFreqReading,
    ProcStatSnapshot,
    SensorPaths,
    frequency_load,
    parse_proc_stat,
    read_cpufreq,
    run_sampler,
    time_load_between,
)

GOLDEN_STAT = (
    "cpu  100 0 50 800 50 0 0 0\n"
    "cpu0 25 0 13 200 13 0 0 0\n"
    "cpu1 25 0 12 200 12 0 0 0\n"
    "intr 12345\n"
    "ctxt 6789\n"
)


def make_cpufreq_tree(root, freqs, max_khz=1200000, with_scaling_max=True):
    for i, cur in enumerate(freqs):
        d = root / f"cpu{i}" / "cpufreq"
        d.mkdir(parents=True)
        (d / "scaling_cur_freq").write_text(f"{cur}\n")
        if with_scaling_max:
            (d / "scaling_max_freq").write_text(f"{max_khz}\n")
        (d / "cpuinfo_max_freq").write_text(f"{max_khz}\n")


class TestParseProcStat:
    def test_golden_fixture(self):
        snap = parse_proc_stat(GOLDEN_STAT)
        assert snap.user == 100
        assert snap.nice == 0
        assert snap.system == 50
        assert snap.idle == 800
        assert snap.iowait == 50
        assert snap.irq == 0 and snap.softirq == 0 and snap.steal == 0
        assert snap.total == 1000

    def test_all_zero_counters(self):
        snap = parse_proc_stat("cpu 0 0 0 0\n")
        assert snap.total == 0

    def test_missing_trailing_fields_default_zero(self):
        snap = parse_proc_stat("cpu 10 20 30 40\n")
        assert (snap.iowait, snap.irq, snap.softirq, snap.steal) == (0, 0, 0, 0)

    def test_missing_cpu_line(self):
        with pytest.raises(ProcStatParseError):
            parse_proc_stat("intr 123\nctxt 456\n")

    def test_per_core_lines_are_not_the_aggregate(self):
        with pytest.raises(ProcStatParseError):
            parse_proc_stat("cpu0 1 2 3 4\n")

    def test_non_integer_field(self):
        with pytest.raises(ProcStatParseError):
            parse_proc_stat("cpu 1 2 x 4\n")

    def test_too_few_fields(self):
        with pytest.raises(ProcStatParseError):
            parse_proc_stat("cpu 1 2 3\n")

    def test_negative_counter(self):
        with pytest.raises(ProcStatParseError):
            parse_proc_stat("cpu 1 2 3 -4\n")

    @settings(max_examples=300, deadline=None)
    @given(st.binary(max_size=256))
    def test_totality_on_arbitrary_bytes(self, blob):
        text = blob.decode("utf-8", errors="replace")
        try:
            snap = parse_proc_stat(text)
        except ProcStatParseError:
            return
        assert isinstance(snap, ProcStatSnapshot)


class TestTimeLoadBetween:
    def _snap(self, **kwargs):
        base = dict(user=0, nice=0, system=0, idle=0, iowait=0, irq=0, softirq=0, steal=0)
        base.update(kwargs)
        return ProcStatSnapshot(**base)

    def test_half_busy(self):
        a = self._snap()
        b = self._snap(user=100, idle=100)
        assert time_load_between(a, b) == pytest.approx(0.5)

    def test_fully_idle(self):
        assert time_load_between(self._snap(), self._snap(idle=500)) == 0.0

    def test_fully_busy(self):
        b = self._snap(user=30, system=20, irq=5)
        assert time_load_between(self._snap(), b) == 1.0

    def test_iowait_counts_as_idle(self):
        b = self._snap(user=50, iowait=50)
        assert time_load_between(self._snap(), b) == pytest.approx(0.5)

    def test_zero_delta(self):
        with pytest.raises(InsufficientDataError):
            time_load_between(self._snap(user=5), self._snap(user=5))

    def test_counter_regression(self):
        with pytest.raises(CounterWrapError):
            time_load_between(self._snap(user=10), self._snap(user=5, idle=100))

    @settings(max_examples=100, deadline=None)
    @given(
        deltas=st.lists(st.integers(0, 10_000), min_size=8, max_size=8),
        scale=st.integers(2, 1000),
    )
    def test_scale_invariance(self, deltas, scale):
        if sum(deltas) == 0:
            return
        a = self._snap()
        names = ("user", "nice", "system", "idle", "iowait", "irq", "softirq", "steal")
        b = ProcStatSnapshot(**dict(zip(names, deltas)))
        b_scaled = ProcStatSnapshot(**{n: d * scale for n, d in zip(names, deltas)})
        assert time_load_between(a, b) == pytest.approx(time_load_between(a, b_scaled))


class TestFrequencyLoad:
    def test_all_cores_at_max(self):
        reading = CpuFreqReading((1200, 1200, 1200, 1200), (1200, 1200, 1200, 1200))
        assert frequency_load(reading) == 1.0

    def test_mixed_levels(self):
        # Direct arithmetic: (0.5 + 0.5 + 1 + 1) / 4 = 0.75.
        reading = CpuFreqReading((600, 600, 1200, 1200), (1200, 1200, 1200, 1200))
        assert frequency_load(reading) == pytest.approx(0.75)

    def test_single_core_quarter(self):
        assert frequency_load(CpuFreqReading((300,), (1200,))) == pytest.approx(0.25)

    def test_empty_reading_rejected(self):
        with pytest.raises(ValueError):
            CpuFreqReading((), ())

    def test_current_above_max_rejected(self):
        with pytest.raises(ValueError):
            CpuFreqReading((1300,), (1200,))


class TestReadCpufreq:
    def test_reads_fixture_tree(self, tmp_path):
        make_cpufreq_tree(tmp_path, [600000, 600000, 1200000, 1200000])
        reading = read_cpufreq(SensorPaths(cpu_sysfs_root=tmp_path))
        assert frequency_load(reading) == pytest.approx(0.75)

    def test_cpuinfo_max_fallback(self, tmp_path):
        make_cpufreq_tree(tmp_path, [600000], with_scaling_max=False)
        reading = read_cpufreq(SensorPaths(cpu_sysfs_root=tmp_path))
        assert reading.max_hz == (1200000,)

    def test_missing_root(self, tmp_path):
        with pytest.raises(SensorAccessError):
            read_cpufreq(SensorPaths(cpu_sysfs_root=tmp_path / "nope"))


class TestRunSampler:
    def test_zero_duration_gives_empty_trace(self, tmp_path):
        trace = run_sampler(Metric.FREQUENCY_LOAD, 1.0, 0.0,
                            SensorPaths(cpu_sysfs_root=tmp_path))
        assert len(trace) == 0

    def test_missing_stat_path_raises_access_error(self, tmp_path):
        paths = SensorPaths(proc_stat=tmp_path / "absent", cpu_sysfs_root=tmp_path)
        with pytest.raises(SensorAccessError) as err:
            run_sampler(Metric.TIME_LOAD, 10.0, 0.2, paths)
        assert "absent" in str(err.value)

    def test_frequency_sampling_from_fixture(self, tmp_path):
        make_cpufreq_tree(tmp_path, [600000, 1200000])
        paths = SensorPaths(cpu_sysfs_root=tmp_path)
        trace = run_sampler(Metric.FREQUENCY_LOAD, 50.0, 0.1, paths)
        assert len(trace) == 5
        np.testing.assert_allclose(trace.samples, 0.75)
        assert trace.metric is Metric.FREQUENCY_LOAD

    def test_time_sampling_with_synthetic_clock(self, tmp_path):
        # Drive the sampler with a fake clock and a stat file rewritten on
        # every read: 50% busy per interval.
        stat = tmp_path / "stat"
        state = {"t": 0.0, "user": 0, "idle": 0}

        def clock():
            return state["t"]

        def sleep(dt):
            state["t"] += dt
            state["user"] += int(dt * 100 * 0.5)
            state["idle"] += int(dt * 100 * 0.5)
            stat.write_text(f"cpu {state['user']} 0 0 {state['idle']} 0 0 0 0\n")

        stat.write_text("cpu 0 0 0 0 0 0 0 0\n")
        paths = SensorPaths(proc_stat=stat, cpu_sysfs_root=tmp_path)
        trace = run_sampler(Metric.TIME_LOAD, 1.0, 4.0, paths, clock=clock, sleep=sleep)
        assert len(trace) == 4
        np.testing.assert_allclose(trace.samples, 0.5, atol=0.02)

    @pytest.mark.skipif(not os.path.exists("/proc/stat"), reason="needs a Linux /proc")
    def test_live_proc_stat_smoke(self):
        trace = run_sampler(Metric.TIME_LOAD, 5.0, 0.6)
        assert len(trace) == 3
        assert all(0.0 <= s <= 1.0 for s in trace.samples)

    def test_cadence_tracks_the_requested_rate(self, tmp_path):
        # Soft real-time smoke: total sampling time within 10% of ideal
        # (plus a constant slack for the final read) on an unloaded host.
        import time

        make_cpufreq_tree(tmp_path, [600000])
        paths = SensorPaths(cpu_sysfs_root=tmp_path)
        rate, duration = 10.0, 1.0
        t0 = time.monotonic()
        trace = run_sampler(Metric.FREQUENCY_LOAD, rate, duration, paths)
        elapsed = time.monotonic() - t0
        assert len(trace) == 10
        ideal = duration - 1.0 / rate  # last sample fires at (n-1)/rate
        assert abs(elapsed - ideal) <= 0.1 * duration + 0.05


class TestSimulatorAgreement:
    def test_eq1_matches_channel_level_fractions(self):
        # The same ratio formula evaluated through both call sites.
        from loadlink.channel import DeviceProfile

        device = DeviceProfile(clock_levels_hz=(200e6, 600e6, 1200e6))
        for level in device.clock_levels_hz:
            reading = CpuFreqReading(
                current_hz=tuple(int(level) for _ in range(device.n_cores)),
                max_hz=tuple(int(device.max_clock_hz) for _ in range(device.n_cores)),
            )
            expected = level / device.max_clock_hz
            assert abs(frequency_load(reading) - expected) < 1e-12
