"""Deterministic simulated edge device.

Converts a transmitter's target-load waveform plus baseline and
interference processes into sensed time-load and frequency-load traces.
The composition law is additive demand with clamping; the frequency
metric runs through a DVFS governor that picks the lowest clock level
able to cover the demand, with a configurable reaction delay and
minimum dwell.

All randomness is derived from counter-based hashes keyed on
``(rng_seed, stream, index)``, so a trace is a pure function of its
inputs and single-point queries agree exactly with bulk sampling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri

from .codec import EMPTY_SCHEDULE, Metric, WaveformSchedule, WorkloadTrace
from .errors import ConfigError

TICKS_PER_SAMPLE = 8
BASELINE_NOISE_DT_S = 0.05
MEDIA_REDRAW_DT_S = 0.25
MEDIA_LOAD_RANGE = (0.10, 0.30)
COMPRESS_ON_S = 2.0
COMPRESS_OFF_S = 0.5
COMPRESS_LOAD = 0.60

_STREAM_BASELINE = 1
_STREAM_MEDIA = 2
_STREAM_MEASUREMENT = 3

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


class Interference(enum.Enum):
    NONE = "none"
    MEDIA = "media"
    COMPRESS = "compress"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DeviceProfile:
    """Simulated device: identical cores, shared clock, simple DVFS governor.

    ``pinned_at_max`` models boards whose governor never scales down, so
    the clock sits at the top level regardless of demand.
    """

    n_cores: int = 4
    clock_levels_hz: tuple[float, ...] = (200e6, 300e6, 400e6, 600e6, 800e6, 1000e6, 1100e6, 1200e6)
    dvfs_reaction_delay_s: float = 0.05
    dvfs_min_dwell_s: float = 0.1
    pinned_at_max: bool = False

    def __post_init__(self):
        if self.n_cores < 2:
            raise ValueError("device must have at least 2 cores")
        levels = tuple(float(v) for v in self.clock_levels_hz)
        if not levels:
            raise ValueError("clock_levels_hz must be nonempty")
        if any(v <= 0 for v in levels):
            raise ValueError("clock levels must be positive")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("clock levels must be strictly ascending")
        if self.dvfs_reaction_delay_s < 0 or self.dvfs_min_dwell_s < 0:
            raise ValueError("DVFS delays must be nonnegative")
        object.__setattr__(self, "clock_levels_hz", levels)

    @property
    def max_clock_hz(self) -> float:
        return self.clock_levels_hz[-1]

    @property
    def level_fractions(self) -> np.ndarray:
        """Normalized capacities level/max, ascending (the frequency-load alphabet)."""
        return np.array(self.clock_levels_hz) / self.max_clock_hz


def phone_profile() -> DeviceProfile:
    """Quad-core handset with eight clock levels from 200 MHz to 1.2 GHz."""
    return DeviceProfile()


def rpi_profile() -> DeviceProfile:
    """Single-board computer: two clock levels, governor pinned at the top one."""
    return DeviceProfile(
        n_cores=4,
        clock_levels_hz=(600e6, 1200e6),
        dvfs_reaction_delay_s=0.05,
        dvfs_min_dwell_s=0.1,
        pinned_at_max=True,
    )


@dataclass(frozen=True)
class ChannelConfig:
    baseline_load: float = 0.05
    baseline_noise_sigma: float = 0.02
    interference: Interference = Interference.NONE
    interference_schedule: WaveformSchedule | None = None
    tx_response_delay_s: float = 0.0
    measurement_noise_sigma: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.baseline_load <= 1.0:
            raise ValueError("baseline_load must lie in [0, 1]")
        if self.baseline_noise_sigma < 0 or self.measurement_noise_sigma < 0:
            raise ValueError("noise sigmas must be nonnegative")
        if self.tx_response_delay_s < 0:
            raise ValueError("tx_response_delay_s must be nonnegative")
        if self.interference is Interference.CUSTOM and self.interference_schedule is None:
            raise ValueError("CUSTOM interference requires interference_schedule")

    def with_seed(self, seed: int) -> "ChannelConfig":
        return replace(self, rng_seed=int(seed))


def ideal_channel(seed: int = 0) -> ChannelConfig:
    """Noise-free, delay-free, interference-free channel with zero baseline."""
    return ChannelConfig(
        baseline_load=0.0,
        baseline_noise_sigma=0.0,
        interference=Interference.NONE,
        tx_response_delay_s=0.0,
        measurement_noise_sigma=0.0,
        rng_seed=seed,
    )


def ideal_device() -> DeviceProfile:
    """Default device with an instantly reacting governor."""
    return DeviceProfile(dvfs_reaction_delay_s=0.0, dvfs_min_dwell_s=0.0)


# --- counter-based randomness -------------------------------------------------

def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + _U64(0x9E3779B97F4A7C15)) & _U64(_MASK64)
    x = ((x ^ (x >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _U64(_MASK64)
    x = ((x ^ (x >> _U64(27))) * _U64(0x94D049BB133111EB)) & _U64(_MASK64)
    return x ^ (x >> _U64(31))


def _zigzag(idx: np.ndarray) -> np.ndarray:
    i = np.asarray(idx).astype(np.int64)
    return ((i << np.int64(1)) ^ (i >> np.int64(63))).view(np.uint64)


def _hash_uniform(seed: int, stream: int, idx) -> np.ndarray:
    """Uniform(0, 1) value keyed by (seed, stream, index); vectorized and pure."""
    with np.errstate(over="ignore"):
        key = _splitmix64(np.array(seed & _MASK64, dtype=np.uint64))
        key = _splitmix64(key ^ (_U64(stream) * _U64(0xBF58476D1CE4E5B9)))
        x = _splitmix64(_zigzag(idx) ^ key)
        x = _splitmix64(x)
    return (x >> _U64(11)).astype(np.float64) * (2.0 ** -53)


def _hash_gaussian(seed: int, stream: int, idx) -> np.ndarray:
    u = np.clip(_hash_uniform(seed, stream, idx), 1e-12, 1 - 1e-12)
    return ndtri(u)


# --- demand composition -------------------------------------------------------

def interference_signal(kind: Interference, t, seed: int,
                        schedule: WaveformSchedule | None = None) -> np.ndarray:
    """Interfering compute load at the given instants (vectorized)."""
    t = np.asarray(t, dtype=float)
    if kind is Interference.NONE:
        return np.zeros_like(t)
    if kind is Interference.MEDIA:
        k = np.floor(t / MEDIA_REDRAW_DT_S)
        lo, hi = MEDIA_LOAD_RANGE
        return lo + (hi - lo) * _hash_uniform(seed, _STREAM_MEDIA, k)
    if kind is Interference.COMPRESS:
        phase = np.mod(t, COMPRESS_ON_S + COMPRESS_OFF_S)
        return np.where(phase < COMPRESS_ON_S, COMPRESS_LOAD, 0.0)
    if kind is Interference.CUSTOM:
        if schedule is None:
            raise ValueError("CUSTOM interference requires a schedule")
        return schedule.load_at(t)
    raise ValueError(f"unknown interference kind {kind!r}")


def _baseline(cfg: ChannelConfig, t: np.ndarray) -> np.ndarray:
    base = np.full_like(t, cfg.baseline_load, dtype=float)
    if cfg.baseline_noise_sigma > 0:
        k = np.floor(t / BASELINE_NOISE_DT_S)
        base = base + cfg.baseline_noise_sigma * _hash_gaussian(cfg.rng_seed, _STREAM_BASELINE, k)
    return base


def _demand(t: np.ndarray, tx: WaveformSchedule, cfg: ChannelConfig) -> np.ndarray:
    tx_load = tx.load_at(t - cfg.tx_response_delay_s)
    inter = interference_signal(cfg.interference, t, cfg.rng_seed, cfg.interference_schedule)
    return np.clip(_baseline(cfg, t) + inter + tx_load, 0.0, 1.0)


def effective_demand(t: float, tx: WaveformSchedule, cfg: ChannelConfig) -> float:
    """Instantaneous composed demand: clamp(baseline + interference + delayed tx)."""
    return float(_demand(np.asarray([t], dtype=float), tx, cfg)[0])


# --- sampling -----------------------------------------------------------------

def _sample_grid(sample_rate_hz: float, duration_s: float, start_time_s: float):
    if not math.isfinite(sample_rate_hz) or sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if duration_s < 1.0 / sample_rate_hz - 1e-12:
        raise ValueError("duration_s must cover at least one sample interval")
    n = int(round(duration_s * sample_rate_hz))
    tick = 1.0 / (sample_rate_hz * TICKS_PER_SAMPLE)
    # Tick midpoints: integration nodes that never land on segment boundaries.
    ticks = start_time_s + (np.arange(n * TICKS_PER_SAMPLE) + 0.5) * tick
    return n, tick, ticks


def sample_time_load(tx: WaveformSchedule, device: DeviceProfile, cfg: ChannelConfig,
                     sample_rate_hz: float, duration_s: float,
                     start_time_s: float = 0.0) -> WorkloadTrace:
    """Sense the time-load metric: per-sample mean of demand plus measurement noise."""
    del device  # time load does not depend on the clock configuration
    n, _tick, ticks = _sample_grid(sample_rate_hz, duration_s, start_time_s)
    demand = _demand(ticks, tx, cfg).reshape(n, TICKS_PER_SAMPLE).mean(axis=1)
    if cfg.measurement_noise_sigma > 0:
        noise = cfg.measurement_noise_sigma * _hash_gaussian(
            cfg.rng_seed, _STREAM_MEASUREMENT, np.arange(n))
        demand = demand + noise
    return WorkloadTrace(
        metric=Metric.TIME_LOAD,
        sample_rate_hz=sample_rate_hz,
        samples=np.clip(demand, 0.0, 1.0),
        start_time_s=start_time_s,
    )


def _governor_levels(demand: np.ndarray, device: DeviceProfile, tick_s: float,
                     initial_demand: float) -> np.ndarray:
    """Per-tick clock level indices chosen by the governor.

    ``initial_demand`` is the demand just before the trace begins; the
    governor is assumed settled on its level at that point, so reaction
    delay and dwell apply to every in-trace transition including one at
    the very first tick.
    """
    caps = device.level_fractions
    top = len(caps) - 1
    if device.pinned_at_max:
        return np.full(demand.size, top, dtype=np.intp)
    desired = np.minimum(np.searchsorted(caps, demand, side="left"), top)
    if device.dvfs_reaction_delay_s == 0 and device.dvfs_min_dwell_s == 0:
        return desired
    levels = np.empty(demand.size, dtype=np.intp)
    cur = min(int(np.searchsorted(caps, initial_demand, side="left")), top)
    switched_at = -math.inf
    pending = cur
    pending_since = 0.0
    for j in range(demand.size):
        t = j * tick_s
        des = int(desired[j])
        if des != cur:
            if des != pending:
                pending = des
                pending_since = t
            if (t - pending_since) >= device.dvfs_reaction_delay_s and \
               (t - switched_at) >= device.dvfs_min_dwell_s:
                cur = des
                switched_at = t
                pending = cur
        else:
            pending = cur
        levels[j] = cur
    return levels


def sample_frequency_load(tx: WaveformSchedule, device: DeviceProfile, cfg: ChannelConfig,
                          sample_rate_hz: float, duration_s: float,
                          start_time_s: float = 0.0) -> WorkloadTrace:
    """Sense the frequency-load metric: instantaneous clock-ratio reads.

    All cores share one governor-chosen level here, so the per-core mean
    of level/max collapses to level/max; samples are exact members of the
    device's normalized level set.
    """
    n, tick, ticks = _sample_grid(sample_rate_hz, duration_s, start_time_s)
    demand = _demand(ticks, tx, cfg)
    pre = float(_demand(np.asarray([start_time_s - 0.5 * tick]), tx, cfg)[0])
    levels = _governor_levels(demand, device, tick, initial_demand=pre)
    caps = device.level_fractions
    # Sample instants fall at the start of every TICKS_PER_SAMPLE-th tick.
    samples = caps[levels[::TICKS_PER_SAMPLE]]
    return WorkloadTrace(
        metric=Metric.FREQUENCY_LOAD,
        sample_rate_hz=sample_rate_hz,
        samples=samples,
        start_time_s=start_time_s,
    )


def sample_trace(metric: Metric, tx: WaveformSchedule, device: DeviceProfile,
                 cfg: ChannelConfig, sample_rate_hz: float, duration_s: float,
                 start_time_s: float = 0.0) -> WorkloadTrace:
    sampler = sample_time_load if metric is Metric.TIME_LOAD else sample_frequency_load
    return sampler(tx, device, cfg, sample_rate_hz, duration_s, start_time_s)


# --- plain-text profile files ---------------------------------------------------

_DEVICE_KEYS = {"n_cores", "clock_levels_hz", "dvfs_reaction_delay_s", "dvfs_min_dwell_s",
                "pinned_at_max"}
_CHANNEL_KEYS = {"baseline_load", "baseline_noise_sigma", "interference",
                 "tx_response_delay_s", "measurement_noise_sigma", "rng_seed"}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def load_profiles(path) -> tuple[DeviceProfile, ChannelConfig]:
    """Read a ``key = value`` per line profile file; unknown keys are rejected."""
    device_kwargs: dict = {}
    channel_kwargs: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            try:
                if key == "n_cores":
                    device_kwargs[key] = int(value)
                elif key == "clock_levels_hz":
                    device_kwargs[key] = tuple(float(v) for v in value.split(","))
                elif key in ("dvfs_reaction_delay_s", "dvfs_min_dwell_s"):
                    device_kwargs[key] = float(value)
                elif key == "pinned_at_max":
                    device_kwargs[key] = _parse_bool(value)
                elif key == "interference":
                    kind = Interference(value.lower())
                    if kind is Interference.CUSTOM:
                        raise ConfigError(
                            f"{path}:{lineno}: custom interference cannot be expressed in a profile file")
                    channel_kwargs[key] = kind
                elif key == "rng_seed":
                    channel_kwargs[key] = int(value)
                elif key in _CHANNEL_KEYS:
                    channel_kwargs[key] = float(value)
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    try:
        return DeviceProfile(**device_kwargs), ChannelConfig(**channel_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
