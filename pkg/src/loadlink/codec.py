"""Workload-waveform codec: ASK/FSK over a unipolar NRZ line code.

Bits ride on a device's aggregate processor workload: a sustained high
load is the high carrier level, the idle baseline the low level.  Under
ASK a whole bit duration sits at one level; under FSK each bit is a
square wave whose frequency (fast vs. slow, 5:1 by default) carries the
value.  This module is the pure signal layer — it knows nothing about
how workload is produced or sensed, only about ideal waveforms and
sampled traces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError

Bits = list[int]


class Scheme(enum.Enum):
    ASK = "ask"
    FSK = "fsk"


class Metric(enum.Enum):
    TIME_LOAD = "time_load"
    FREQUENCY_LOAD = "frequency_load"


def parse_bits(text: str) -> Bits:
    """Parse a string like ``'101010'`` into a bit list."""
    bits = []
    for ch in text.strip():
        if ch not in "01":
            raise ValueError(f"bit string may contain only 0 and 1, got {ch!r}")
        bits.append(int(ch))
    return bits


def bits_to_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def random_bits(n: int, rng: np.random.Generator) -> Bits:
    return [int(b) for b in rng.integers(0, 2, size=n)]


def int_to_bits(value: int, width: int) -> Bits:
    """Big-endian fixed-width bit expansion of a nonnegative integer."""
    if value < 0 or value >= (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def bits_to_int(bits) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _validate_bits(bits) -> Bits:
    if bits is None or len(bits) == 0:
        raise ValueError("bit vector must contain at least one bit")
    out = []
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bit vector elements must be 0 or 1, got {b!r}")
        out.append(int(b))
    return out


@dataclass(frozen=True)
class ModulationConfig:
    """Transmitter-side parameters.

    ``bit_duration_s`` is the per-bit airtime T; ``fsk_cycle_ratio`` is the
    fast:slow carrier frequency ratio (the fast carrier completes that many
    cycles per bit, the slow carrier exactly one).
    """

    scheme: Scheme
    bit_duration_s: float
    high_load: float = 1.0
    low_load: float = 0.0
    fsk_cycle_ratio: int = 5

    def __post_init__(self):
        if not math.isfinite(self.bit_duration_s) or self.bit_duration_s <= 0:
            raise ValueError(f"bit_duration_s must be a positive finite number, got {self.bit_duration_s}")
        if not 0.0 < self.high_load <= 1.0:
            raise ValueError("high_load must lie in (0, 1]")
        if not 0.0 <= self.low_load < 1.0:
            raise ValueError("low_load must lie in [0, 1)")
        if self.high_load <= self.low_load:
            raise ValueError("high_load must exceed low_load")
        if int(self.fsk_cycle_ratio) != self.fsk_cycle_ratio or self.fsk_cycle_ratio < 2:
            raise ValueError("fsk_cycle_ratio must be an integer >= 2")


@dataclass(frozen=True)
class WaveformSchedule:
    """Piecewise-constant target-load signal: (duration_s, target_load) segments."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        segs = tuple((float(d), float(v)) for d, v in self.segments)
        for d, v in segs:
            if not math.isfinite(d) or d <= 0:
                raise ValueError(f"segment duration must be positive and finite, got {d}")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"segment load must lie in [0, 1], got {v}")
        object.__setattr__(self, "segments", segs)

    @property
    def total_duration_s(self) -> float:
        return float(math.fsum(d for d, _ in self.segments))

    def boundaries(self) -> np.ndarray:
        """Cumulative segment start/end instants, length ``len(segments) + 1``."""
        durs = np.array([d for d, _ in self.segments], dtype=float)
        return np.concatenate([[0.0], np.cumsum(durs)])

    def load_at(self, t) -> np.ndarray:
        """Target load at each instant in ``t`` (0 outside the schedule)."""
        t = np.asarray(t, dtype=float)
        if not self.segments:
            return np.zeros_like(t)
        bounds = self.boundaries()
        loads = np.array([v for _, v in self.segments], dtype=float)
        idx = np.searchsorted(bounds, t, side="right") - 1
        inside = (t >= 0.0) & (t < bounds[-1])
        idx = np.clip(idx, 0, len(loads) - 1)
        return np.where(inside, loads[idx], 0.0)


EMPTY_SCHEDULE = WaveformSchedule(segments=())


@dataclass(eq=False, frozen=True)
class WorkloadTrace:
    """Uniformly sampled workload observations, values in [0, 1].

    ``start_time_s`` is relative to the rendezvous instant: sample ``i``
    was taken at ``start_time_s + i / sample_rate_hz``.
    """

    metric: Metric
    sample_rate_hz: float
    samples: np.ndarray
    start_time_s: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.sample_rate_hz) or self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive and finite, got {self.sample_rate_hz}")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and (samples.min() < -1e-9 or samples.max() > 1.0 + 1e-9):
            raise ValueError("trace samples must lie in [0, 1]")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.samples.size) / self.sample_rate_hz

    def from_time(self, t0: float) -> "WorkloadTrace":
        """Drop samples taken before ``t0`` (used to align on the rendezvous)."""
        first = int(math.ceil((t0 - self.start_time_s) * self.sample_rate_hz - 1e-9))
        first = max(first, 0)
        return WorkloadTrace(
            metric=self.metric,
            sample_rate_hz=self.sample_rate_hz,
            samples=self.samples[first:],
            start_time_s=self.start_time_s + first / self.sample_rate_hz,
        )

    def before_time(self, t0: float) -> "WorkloadTrace":
        """Keep only samples taken strictly before ``t0``."""
        first = int(math.ceil((t0 - self.start_time_s) * self.sample_rate_hz - 1e-9))
        first = max(first, 0)
        return WorkloadTrace(
            metric=self.metric,
            sample_rate_hz=self.sample_rate_hz,
            samples=self.samples[:first],
            start_time_s=self.start_time_s,
        )


@dataclass(frozen=True)
class DemodConfig:
    """Receiver-side parameters mirroring :class:`ModulationConfig`.

    For ASK a window decodes to 1 when at least ``ask_majority`` of its
    samples exceed ``ask_threshold``.  For FSK the decision frequency
    threshold is the midpoint 3/T between the slow (1/T) and fast (5/T)
    carriers, exposed as :attr:`fsk_freq_threshold_hz`.
    """

    scheme: Scheme
    bit_duration_s: float
    ask_threshold: float = 0.5
    ask_majority: float = 0.75
    fsk_cycle_ratio: int = 5

    def __post_init__(self):
        if not math.isfinite(self.bit_duration_s) or self.bit_duration_s <= 0:
            raise ValueError("bit_duration_s must be a positive finite number")
        if not 0.0 < self.ask_threshold < 1.0:
            raise ValueError("ask_threshold must lie in (0, 1)")
        if not 0.5 < self.ask_majority <= 1.0:
            raise ValueError("ask_majority must lie in (0.5, 1]")
        if int(self.fsk_cycle_ratio) != self.fsk_cycle_ratio or self.fsk_cycle_ratio < 2:
            raise ValueError("fsk_cycle_ratio must be an integer >= 2")

    @property
    def fsk_freq_threshold_hz(self) -> float:
        return 3.0 / self.bit_duration_s

    @classmethod
    def from_modulation(cls, cfg: ModulationConfig, ask_threshold: float = 0.5,
                        ask_majority: float = 0.75) -> "DemodConfig":
        return cls(
            scheme=cfg.scheme,
            bit_duration_s=cfg.bit_duration_s,
            ask_threshold=ask_threshold,
            ask_majority=ask_majority,
            fsk_cycle_ratio=cfg.fsk_cycle_ratio,
        )


def modulate(bits, cfg: ModulationConfig) -> WaveformSchedule:
    """Encode a bit vector as an ideal target-load waveform.

    ASK: bit 1 is one segment (T, high), bit 0 one segment (T, low).
    FSK: bit 0 is one high/low square-wave cycle spanning T; bit 1 is
    ``fsk_cycle_ratio`` such cycles, each of duration T/ratio.
    """
    bits = _validate_bits(bits)
    T = cfg.bit_duration_s
    segments: list[tuple[float, float]] = []
    for b in bits:
        if cfg.scheme is Scheme.ASK:
            segments.append((T, cfg.high_load if b else cfg.low_load))
        else:
            cycles = cfg.fsk_cycle_ratio if b else 1
            half = T / (2 * cycles)
            for _ in range(cycles):
                segments.append((half, cfg.high_load))
                segments.append((half, cfg.low_load))
    return WaveformSchedule(tuple(segments))


def required_sample_rate(cfg: ModulationConfig | DemodConfig) -> float:
    """Receiver sampling rate: 4x the highest carrier frequency.

    ASK's highest frequency is the bit rate 1/T; FSK's is the fast
    carrier ratio/T.  Hence 4/T and 4*ratio/T respectively.
    """
    if cfg.scheme is Scheme.ASK:
        return 4.0 / cfg.bit_duration_s
    return 4.0 * cfg.fsk_cycle_ratio / cfg.bit_duration_s


def _bit_windows(trace: WorkloadTrace, cfg: DemodConfig, expected_bits: int | None) -> np.ndarray:
    """Partition trace samples into per-bit windows of round(T * rate) samples.

    The final partial window is discarded.  Raises when fewer full windows
    exist than requested (or none at all).
    """
    rate = trace.sample_rate_hz
    nyquist = required_sample_rate(cfg)
    if rate < nyquist - 1e-9:
        raise ValueError(
            f"sample rate {rate} Hz is below the required rate {nyquist} Hz for this scheme"
        )
    w = int(round(cfg.bit_duration_s * rate))
    if w < 1:
        raise ValueError("bit duration spans less than one sample at this rate")
    available = trace.samples.size // w
    if available == 0:
        raise InsufficientDataError(
            f"trace holds {trace.samples.size} samples, shorter than one bit window of {w}"
        )
    k = available if expected_bits is None else expected_bits
    if available < k:
        raise InsufficientDataError(
            f"trace holds {available} full bit windows, expected {k}"
        )
    return trace.samples[: k * w].reshape(k, w)


def demodulate_ask(trace: WorkloadTrace, cfg: DemodConfig, expected_bits: int | None = None) -> Bits:
    """Threshold-count ASK detection.

    A window decodes to 1 iff at least ``ceil(ask_majority * w)`` of its
    ``w`` samples are strictly above ``ask_threshold``.
    """
    windows = _bit_windows(trace, cfg, expected_bits)
    w = windows.shape[1]
    need = math.ceil(cfg.ask_majority * w)
    counts = (windows > cfg.ask_threshold).sum(axis=1)
    return [int(c >= need) for c in counts]


def demodulate_fsk(trace: WorkloadTrace, cfg: DemodConfig, expected_bits: int | None = None) -> Bits:
    """Spectral-peak FSK detection.

    Per bit window the mean is removed, the power spectrum is taken over
    that window, and the bit is 1 iff the peak-power frequency exceeds
    the midpoint threshold 3/T.
    """
    windows = _bit_windows(trace, cfg, expected_bits)
    window_duration = windows.shape[1] / trace.sample_rate_hz
    bits = []
    for window in windows:
        freq, _power = spectral_peak(window, window_duration)
        bits.append(int(freq > cfg.fsk_freq_threshold_hz))
    return bits


def demodulate(trace: WorkloadTrace, cfg: DemodConfig, expected_bits: int | None = None) -> Bits:
    if cfg.scheme is Scheme.ASK:
        return demodulate_ask(trace, cfg, expected_bits)
    return demodulate_fsk(trace, cfg, expected_bits)


def spectral_peak(samples, window_duration_s: float) -> tuple[float, float]:
    """Peak of the mean-removed power spectrum of one bit window.

    Returns ``(frequency_hz, power)`` over the bins m/window_duration for
    m = 1 .. floor(n/2).  Ties break toward the lower frequency, so a
    silent (constant) window reports the lowest bin with zero power.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise InsufficientDataError(f"spectral peak needs at least 4 samples, got {x.size}")
    if not math.isfinite(window_duration_s) or window_duration_s <= 0:
        raise ValueError("window_duration_s must be positive and finite")
    x = x - x.mean()
    power = np.abs(np.fft.rfft(x)) ** 2
    # Bin 0 is the removed mean; argmax over bins 1..floor(n/2) keeps the
    # first (lowest-frequency) bin on ties.
    m = 1 + int(np.argmax(power[1:]))
    return m / window_duration_s, float(power[m])


def ask_detection_threshold(baseline_mean: float, observed_peak: float,
                            full_floor: float = 0.9) -> float:
    """Midpoint detection threshold between baseline and full workload.

    The full level is the in-frame peak, floored at ``full_floor`` so a
    silent frame cannot drag the threshold down to the baseline.  The
    result is clamped into (0, 1) so it is always a valid
    :class:`DemodConfig` threshold, even for saturated traces.
    """
    full = max(float(observed_peak), full_floor)
    midpoint = (float(baseline_mean) + full) / 2.0
    return min(max(midpoint, 1e-6), 1.0 - 1e-6)
