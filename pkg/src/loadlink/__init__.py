"""Covert communication over processor workload.

A toolkit that transmits and receives bits through a device's aggregate
processor workload (time load and DVFS frequency load): an ASK/FSK
workload modem, a deterministic simulated edge device, host sensing and
load generation, the covert device-association protocol, and a
BER-versus-data-rate benchmark harness.
"""

from .codec import (
    Bits,
    DemodConfig,
    Metric,
    ModulationConfig,
    Scheme,
    WaveformSchedule,
    WorkloadTrace,
    demodulate,
    demodulate_ask,
    demodulate_fsk,
    modulate,
    required_sample_rate,
    spectral_peak,
)
from .channel import (
    ChannelConfig,
    DeviceProfile,
    Interference,
    effective_demand,
    interference_signal,
    phone_profile,
    rpi_profile,
    sample_frequency_load,
    sample_time_load,
    sample_trace,
)
from .sysload import (
    CpuFreqReading,
    ProcStatSnapshot,
    frequency_load,
    parse_proc_stat,
    run_sampler,
    time_load_between,
)
from .loadgen import LoadPlan, execute, plan_from_schedule
from .assoc import (
    AssociationReport,
    InstallationId,
    RendezvousSchedule,
    VendorRegistry,
    match,
    run_receiver,
    run_transmitter,
)
from .bench import BenchPlan, BerReport, emit_report, run_bench

__version__ = "0.1.0"
