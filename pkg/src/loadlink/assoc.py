"""Covert device-association protocol between colluding app installations.

One installation (the transmitter) modulates its vendor-assigned
installation ID onto the device's processor workload at a scheduled
rendezvous instant; a co-resident installation of the colluding vendor
senses the workload, demodulates the ID, and reports it home, where the
vendors match it against the transmitter vendor's registry.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from datetime import datetime, timezone

from . import loadgen
from .channel import ChannelConfig, DeviceProfile, sample_trace
from .codec import (
    Bits,
    DemodConfig,
    EMPTY_SCHEDULE,
    Metric,
    ModulationConfig,
    WaveformSchedule,
    WorkloadTrace,
    ask_detection_threshold,
    bits_to_int,
    demodulate,
    int_to_bits,
    modulate,
    required_sample_rate,
)
from .errors import IdSpaceExhaustedError, InsufficientDataError

ID_WIDTH_DEFAULT = 48
PREAMBLE_DEFAULT = (1, 0, 1, 0, 1, 0, 1, 0)
CRC_POLY = 0x07
CRC_WIDTH = 8

# A transmitter saturates the workload near 1.0; quiet channels peak well
# below this, so an in-frame peak under the floor means nobody transmitted.
SIGNAL_PRESENT_MIN_PEAK = 0.8
# ASK also needs amplitude contrast: a frame that never rises above the
# pre-rendezvous baseline (e.g. a clock pinned at its top level) is no signal.
SIGNAL_CONTRAST_MIN = 0.2


@dataclass(frozen=True)
class InstallationId:
    app_name: str
    id_bits: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.id_bits) <= 64:
            raise ValueError("installation ID width must lie in 1..64")
        if any(b not in (0, 1) for b in self.id_bits):
            raise ValueError("id_bits must contain only 0 and 1")

    @property
    def width(self) -> int:
        return len(self.id_bits)

    @property
    def value(self) -> int:
        return bits_to_int(self.id_bits)

    @property
    def id_hex(self) -> str:
        digits = (self.width + 3) // 4
        return format(self.value, f"0{digits}x")

    @classmethod
    def from_int(cls, app_name: str, value: int, width: int = ID_WIDTH_DEFAULT) -> "InstallationId":
        return cls(app_name=app_name, id_bits=tuple(int_to_bits(value, width)))


@dataclass(frozen=True)
class RendezvousSchedule:
    """Pre-agreed periodic instants at which both parties synchronize."""

    epoch_s: float = 0.0
    period_s: float = 3600.0
    baseline_window_s: float = 8.0

    def __post_init__(self):
        if self.period_s <= 0:
            raise ValueError("period_s must be positive")
        if self.baseline_window_s < 0:
            raise ValueError("baseline_window_s must be nonnegative")

    def next_after(self, t: float) -> float:
        if t <= self.epoch_s:
            return self.epoch_s
        k = math.ceil((t - self.epoch_s) / self.period_s)
        return self.epoch_s + k * self.period_s


@dataclass(frozen=True)
class FrameOptions:
    """Framing knobs; everything off transmits the bare ID bits."""

    preamble: tuple[int, ...] = ()
    crc8: bool = False

    def overhead_bits(self) -> int:
        return len(self.preamble) + (CRC_WIDTH if self.crc8 else 0)


@dataclass(frozen=True)
class Frame:
    payload: tuple[int, ...]
    preamble: tuple[int, ...] = ()
    crc_bits: tuple[int, ...] = ()

    def serialize(self) -> Bits:
        return list(self.preamble) + list(self.payload) + list(self.crc_bits)

    def __len__(self) -> int:
        return len(self.preamble) + len(self.payload) + len(self.crc_bits)


def crc8(bits, poly: int = CRC_POLY, init: int = 0x00) -> int:
    """CRC-8 over a bit sequence, MSB first."""
    reg = init & 0xFF
    for bit in bits:
        top = (reg >> 7) & 1
        reg = (reg << 1) & 0xFF
        if top ^ int(bit):
            reg ^= poly
    return reg


def build_frame(install_id: InstallationId, options: FrameOptions = FrameOptions()) -> Frame:
    payload = install_id.id_bits
    crc_bits: tuple[int, ...] = ()
    if options.crc8:
        crc_bits = tuple(int_to_bits(crc8(payload), CRC_WIDTH))
    return Frame(payload=payload, preamble=options.preamble, crc_bits=crc_bits)


def serialize_frame(frame: Frame) -> Bits:
    return frame.serialize()


@dataclass(frozen=True)
class RegistryRecord:
    id_bits: tuple[int, ...]
    identity: str
    created_at: str


class VendorRegistry:
    """One vendor's installation-ID database: unique IDs, exact-match lookups."""

    def __init__(self, vendor_name: str, width: int = ID_WIDTH_DEFAULT, rng_seed: int = 0):
        if not 1 <= width <= 64:
            raise ValueError("registry width must lie in 1..64")
        self.vendor_name = vendor_name
        self.width = width
        self.entries: dict[int, RegistryRecord] = {}
        self._next_sequential = 0
        self._rng = random.Random(rng_seed)

    def __len__(self) -> int:
        return len(self.entries)

    def allocate(self, identity: str, policy: str = "sequential") -> InstallationId:
        capacity = 1 << self.width
        if len(self.entries) >= capacity:
            raise IdSpaceExhaustedError(
                f"all {capacity} IDs of width {self.width} are allocated")
        if policy == "sequential":
            value = self._next_sequential
            while value in self.entries:
                value = (value + 1) % capacity
            self._next_sequential = (value + 1) % capacity
        elif policy == "random":
            value = self._rng.getrandbits(self.width)
            while value in self.entries:
                value = self._rng.getrandbits(self.width)
        else:
            raise ValueError(f"unknown allocation policy {policy!r}")
        install_id = InstallationId.from_int(self.vendor_name, value, self.width)
        self.entries[value] = RegistryRecord(
            id_bits=install_id.id_bits,
            identity=identity,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        return install_id

    def lookup(self, bits) -> RegistryRecord | None:
        if len(bits) != self.width:
            return None
        return self.entries.get(bits_to_int(bits))

    def to_json(self) -> str:
        doc = {
            "vendor": self.vendor_name,
            "entries": [
                {
                    "id_hex": InstallationId(self.vendor_name, rec.id_bits).id_hex,
                    "identity": rec.identity,
                    "created_at": rec.created_at,
                }
                for _, rec in sorted(self.entries.items())
            ],
        }
        return json.dumps(doc, indent=2)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path, width: int = ID_WIDTH_DEFAULT) -> "VendorRegistry":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        entries = doc.get("entries", [])
        if entries:
            width = 4 * len(entries[0]["id_hex"])
        registry = cls(vendor_name=doc["vendor"], width=width)
        for entry in entries:
            value = int(entry["id_hex"], 16)
            registry.entries[value] = RegistryRecord(
                id_bits=tuple(int_to_bits(value, width)),
                identity=entry["identity"],
                created_at=entry["created_at"],
            )
        registry._next_sequential = (max(registry.entries) + 1) % (1 << width) if registry.entries else 0
        return registry


@dataclass
class AssociationReport:
    reporter_id: InstallationId | None
    detected_id_bits: Bits
    detected_valid: bool
    matched: RegistryRecord | None = None

    def __post_init__(self):
        if self.matched is not None and not self.detected_valid:
            raise ValueError("a matched record requires a valid detection")

    def to_json_line(self) -> str:
        doc = {
            "reporter_app": self.reporter_id.app_name if self.reporter_id else None,
            "reporter_id_hex": self.reporter_id.id_hex if self.reporter_id else None,
            "detected_id_bits": "".join(str(b) for b in self.detected_id_bits),
            "detected_valid": self.detected_valid,
            "matched_identity": self.matched.identity if self.matched else None,
        }
        return json.dumps(doc)


@dataclass
class TransmitReport:
    frame_bits: Bits
    airtime_s: float
    rendezvous_s: float
    schedule: WaveformSchedule


class SimMedium:
    """Shared simulated device: the transmitter installs its waveform, the
    receiver senses it.  Time 0 is the rendezvous instant."""

    def __init__(self, device: DeviceProfile, channel: ChannelConfig):
        self.device = device
        self.channel = channel
        self.tx_schedule: WaveformSchedule = EMPTY_SCHEDULE

    def transmit(self, schedule: WaveformSchedule) -> None:
        self.tx_schedule = schedule

    def clear(self) -> None:
        self.tx_schedule = EMPTY_SCHEDULE

    def sense(self, metric: Metric, sample_rate_hz: float, duration_s: float,
              start_time_s: float = 0.0) -> WorkloadTrace:
        return sample_trace(metric, self.tx_schedule, self.device, self.channel,
                            sample_rate_hz, duration_s, start_time_s)


def run_transmitter(install_id: InstallationId, modcfg: ModulationConfig,
                    schedule: RendezvousSchedule, medium: SimMedium,
                    options: FrameOptions = FrameOptions(),
                    now_s: float = 0.0) -> TransmitReport:
    """Wait for the next rendezvous and drive the frame through the medium."""
    frame_bits = serialize_frame(build_frame(install_id, options))
    waveform = modulate(frame_bits, modcfg)
    rendezvous = schedule.next_after(now_s)
    medium.transmit(waveform)
    return TransmitReport(
        frame_bits=frame_bits,
        airtime_s=len(frame_bits) * modcfg.bit_duration_s,
        rendezvous_s=rendezvous,
        schedule=waveform,
    )


def host_transmit(install_id: InstallationId, modcfg: ModulationConfig,
                  schedule: RendezvousSchedule, n_cores: int,
                  options: FrameOptions = FrameOptions(),
                  start_at: float | None = None) -> TransmitReport:
    """Drive the frame through real worker threads on this host."""
    frame_bits = serialize_frame(build_frame(install_id, options))
    waveform = modulate(frame_bits, modcfg)
    plan = loadgen.plan_from_schedule(waveform, n_cores)
    loadgen.execute(plan, start_at=start_at)
    return TransmitReport(
        frame_bits=frame_bits,
        airtime_s=len(frame_bits) * modcfg.bit_duration_s,
        rendezvous_s=start_at if start_at is not None else 0.0,
        schedule=waveform,
    )


def _frame_bit_count(expected_width: int, options: FrameOptions) -> int:
    return expected_width + options.overhead_bits()


def receive_trace(trace: WorkloadTrace, modcfg: ModulationConfig, expected_width: int,
                  options: FrameOptions = FrameOptions(),
                  ask_threshold: float | None = None) -> AssociationReport:
    """Demodulate a sensed trace into an (unmatched) association report.

    The trace may begin before the rendezvous (negative start time); the
    pre-rendezvous part provides the baseline for the ASK threshold.
    """
    n_bits = _frame_bit_count(expected_width, options)
    baseline = trace.before_time(0.0)
    frame = trace.from_time(0.0)
    if len(frame) == 0:
        return AssociationReport(None, [], detected_valid=False)
    frame_peak = float(frame.samples.max())
    baseline_mean = float(baseline.samples.mean()) if len(baseline) else None
    if ask_threshold is None:
        ask_threshold = ask_detection_threshold(baseline_mean or 0.0, frame_peak)
    demod = DemodConfig.from_modulation(modcfg, ask_threshold=ask_threshold)
    try:
        bits = demodulate(frame, demod, expected_bits=n_bits)
    except InsufficientDataError:
        return AssociationReport(None, [], detected_valid=False)
    valid = frame_peak >= SIGNAL_PRESENT_MIN_PEAK
    if baseline_mean is not None:
        valid = valid and frame_peak >= baseline_mean + SIGNAL_CONTRAST_MIN
    pre_len = len(options.preamble)
    if pre_len:
        valid = valid and bits[:pre_len] == list(options.preamble)
    payload = bits[pre_len:pre_len + expected_width]
    if options.crc8:
        got_crc = bits_to_int(bits[pre_len + expected_width:])
        valid = valid and got_crc == crc8(payload)
    return AssociationReport(None, payload, detected_valid=valid)


def run_receiver(modcfg: ModulationConfig, schedule: RendezvousSchedule,
                 expected_width: int, medium: SimMedium, metric: Metric,
                 options: FrameOptions = FrameOptions()) -> AssociationReport:
    """Listen across one rendezvous on the simulated medium and demodulate."""
    rate = required_sample_rate(modcfg)
    n_bits = _frame_bit_count(expected_width, options)
    # Whole-sample baseline window keeps the frame grid aligned on t=0.
    window = round(schedule.baseline_window_s * rate) / rate
    duration = window + n_bits * modcfg.bit_duration_s
    trace = medium.sense(metric, rate, duration, start_time_s=-window)
    return receive_trace(trace, modcfg, expected_width, options)


def match(report: AssociationReport, partner_registry: VendorRegistry) -> AssociationReport:
    """Complete a report by looking the detected ID up in the partner's registry."""
    if not report.detected_valid:
        raise ValueError("cannot match an invalid detection")
    record = partner_registry.lookup(report.detected_id_bits)
    return AssociationReport(
        reporter_id=report.reporter_id,
        detected_id_bits=report.detected_id_bits,
        detected_valid=report.detected_valid,
        matched=record,
    )
