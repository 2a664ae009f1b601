"""BER-versus-data-rate benchmark harness.

Reproduces the evaluation methodology: per data rate, several trials of
a random 100-bit message are modulated, pushed through the simulated
channel, demodulated, and compared positionally; each rate is summarized
by the minimum, average, and maximum BER across its trials.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import (
    ChannelConfig,
    DeviceProfile,
    Interference,
    phone_profile,
    sample_trace,
)
from .codec import (
    DemodConfig,
    Metric,
    ModulationConfig,
    Scheme,
    ask_detection_threshold,
    demodulate,
    modulate,
    required_sample_rate,
)
from .errors import InsufficientDataError

DEFAULT_RATE_GRID = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class BenchPlan:
    data_rates_bps: tuple[float, ...] = DEFAULT_RATE_GRID
    scheme: Scheme = Scheme.ASK
    metric: Metric = Metric.TIME_LOAD
    interference: Interference = Interference.NONE
    bits_per_trial: int = 100
    trials_per_rate: int = 4
    seed: int = 0

    def __post_init__(self):
        rates = tuple(float(r) for r in self.data_rates_bps)
        if not rates:
            raise ValueError("at least one data rate is required")
        if any(r <= 0 or not math.isfinite(r) for r in rates):
            raise ValueError("data rates must be positive and finite")
        if len(set(rates)) != len(rates):
            raise ValueError("data rates must be distinct")
        if self.bits_per_trial < 1 or self.trials_per_rate < 1:
            raise ValueError("bits_per_trial and trials_per_rate must be positive")
        object.__setattr__(self, "data_rates_bps", rates)


@dataclass(frozen=True)
class TrialResult:
    rate_bps: float
    trial_index: int
    bit_errors: int
    ber: float
    insufficient_data: bool = False


@dataclass(frozen=True)
class RateSummary:
    rate_bps: float
    ber_min: float
    ber_avg: float
    ber_max: float
    trials: int
    bits_per_trial: int
    any_insufficient: bool = False

    def __post_init__(self):
        if not 0.0 <= self.ber_min <= self.ber_avg <= self.ber_max <= 1.0:
            raise ValueError(
                f"BER summary out of order at {self.rate_bps} bps: "
                f"{self.ber_min}/{self.ber_avg}/{self.ber_max}")


@dataclass(frozen=True)
class BerReport:
    plan: BenchPlan
    summaries: tuple[RateSummary, ...]
    trials: tuple[TrialResult, ...]


def _trial_rngs(seed: int, rate_index: int, trial: int):
    """Independent bit and channel randomness per (plan seed, rate, trial)."""
    root = np.random.SeedSequence([seed, rate_index, trial])
    bits_ss, channel_ss = root.spawn(2)
    bits_rng = np.random.default_rng(bits_ss)
    channel_seed = int(channel_ss.generate_state(1)[0])
    return bits_rng, channel_seed


def run_trial(rate_bps: float, plan: BenchPlan, device: DeviceProfile,
              channel: ChannelConfig, rate_index: int, trial: int) -> TrialResult:
    bits_rng, channel_seed = _trial_rngs(plan.seed, rate_index, trial)
    bits = [int(b) for b in bits_rng.integers(0, 2, size=plan.bits_per_trial)]
    T = 1.0 / rate_bps
    modcfg = ModulationConfig(plan.scheme, bit_duration_s=T)
    schedule = modulate(bits, modcfg)
    sample_rate = required_sample_rate(modcfg)
    cfg = replace(channel, interference=plan.interference, rng_seed=channel_seed)

    if plan.scheme is Scheme.ASK:
        # Pre-listen two bit durations to set the detection threshold the
        # way the receiver does: midpoint of baseline and full workload.
        window = round(2 * T * sample_rate) / sample_rate
        trace = sample_trace(plan.metric, schedule, device, cfg, sample_rate,
                             window + plan.bits_per_trial * T, start_time_s=-window)
        baseline = trace.before_time(0.0)
        frame = trace.from_time(0.0)
        threshold = ask_detection_threshold(float(baseline.samples.mean()),
                                            float(frame.samples.max()))
        demod = DemodConfig.from_modulation(modcfg, ask_threshold=threshold)
    else:
        frame = sample_trace(plan.metric, schedule, device, cfg, sample_rate,
                             plan.bits_per_trial * T)
        demod = DemodConfig.from_modulation(modcfg)

    try:
        received = demodulate(frame, demod, expected_bits=plan.bits_per_trial)
    except InsufficientDataError:
        # Worst case: every bit of the trial counts as an error.
        return TrialResult(rate_bps, trial, plan.bits_per_trial, 1.0, insufficient_data=True)
    errors = sum(a != b for a, b in zip(bits, received))
    return TrialResult(rate_bps, trial, errors, errors / plan.bits_per_trial)


def run_bench(plan: BenchPlan, device: DeviceProfile | None = None,
              channel: ChannelConfig | None = None) -> BerReport:
    """Run the full plan; deterministic given (plan, seed).

    ``channel`` acts as a template: its interference kind and seed are
    overridden per the plan and per trial.
    """
    device = device or phone_profile()
    channel = channel or ChannelConfig()
    trials: list[TrialResult] = []
    summaries: list[RateSummary] = []
    for rate_index, rate in enumerate(sorted(plan.data_rates_bps)):
        rate_trials = [
            run_trial(rate, plan, device, channel, rate_index, t)
            for t in range(plan.trials_per_rate)
        ]
        trials.extend(rate_trials)
        bers = [t.ber for t in rate_trials]
        summaries.append(RateSummary(
            rate_bps=rate,
            ber_min=min(bers),
            ber_avg=sum(bers) / len(bers),
            ber_max=max(bers),
            trials=plan.trials_per_rate,
            bits_per_trial=plan.bits_per_trial,
            any_insufficient=any(t.insufficient_data for t in rate_trials),
        ))
    return BerReport(plan=plan, summaries=tuple(summaries), trials=tuple(trials))


REPORT_HEADER = "rate_bps,ber_min,ber_avg,ber_max,trials,bits_per_trial"


def emit_report(report: BerReport, format: str = "csv") -> str:
    """Render the report as CSV or an aligned text table, rates ascending."""
    if format == "csv":
        lines = [REPORT_HEADER]
        for s in report.summaries:
            lines.append(
                f"{s.rate_bps:g},{s.ber_min:g},{s.ber_avg:g},{s.ber_max:g},"
                f"{s.trials},{s.bits_per_trial}")
        return "\n".join(lines) + "\n"
    if format == "text":
        header = f"{'rate_bps':>9} {'ber_min':>8} {'ber_avg':>8} {'ber_max':>8} {'trials':>7} {'bits':>6}"
        lines = [header, "-" * len(header)]
        for s in report.summaries:
            flag = " *" if s.any_insufficient else ""
            lines.append(
                f"{s.rate_bps:>9g} {s.ber_min:>8.4f} {s.ber_avg:>8.4f} {s.ber_max:>8.4f} "
                f"{s.trials:>7} {s.bits_per_trial:>6}{flag}")
        if any(s.any_insufficient for s in report.summaries):
            lines.append("* at least one trial had too little data; its bits count as errors")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
