"""Command-line entry point tying the toolkit together.

Subcommands: ``send`` (drive a waveform on a host or simulated device),
``recv`` (demodulate live sensing or a trace file), ``trace`` (dump raw
workload samples), ``bench`` (BER-versus-rate benchmark), ``associate``
(full two-party association simulation).  Exit codes: 0 ok, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import loadgen, sysload
from .assoc import (
    FrameOptions,
    InstallationId,
    RendezvousSchedule,
    SimMedium,
    VendorRegistry,
    match,
    receive_trace,
    run_receiver,
    run_transmitter,
)
from .bench import DEFAULT_RATE_GRID, BenchPlan, emit_report, run_bench
from .channel import (
    ChannelConfig,
    DeviceProfile,
    Interference,
    load_profiles,
    phone_profile,
    sample_trace,
)
from .codec import (
    EMPTY_SCHEDULE,
    DemodConfig,
    Metric,
    ModulationConfig,
    Scheme,
    ask_detection_threshold,
    bits_to_str,
    demodulate,
    int_to_bits,
    modulate,
    parse_bits,
    required_sample_rate,
)
from .errors import LoadlinkError
from .trace_io import read_trace_csv, write_trace_csv

_METRICS = {"time": Metric.TIME_LOAD, "freq": Metric.FREQUENCY_LOAD}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="simulation RNG seed")
    parser.add_argument("--config", metavar="FILE",
                        help="device/channel profile file (key = value per line)")
    parser.add_argument("--out", metavar="PATH", help="write output to this file")
    parser.add_argument("--format", choices=["csv", "json", "text"], default=None,
                        help="output format where applicable")


def _profiles(args) -> tuple[DeviceProfile, ChannelConfig]:
    if args.config:
        device, channel = load_profiles(args.config)
    else:
        device, channel = phone_profile(), ChannelConfig()
    if args.seed is not None:
        channel = dataclasses.replace(channel, rng_seed=args.seed)
    if getattr(args, "interference", None):
        channel = dataclasses.replace(
            channel, interference=Interference(args.interference))
    return device, channel


def _send_bits(args) -> list[int]:
    if args.bits is not None:
        return parse_bits(args.bits)
    value = int(args.id_hex, 16)
    width = args.width or 4 * len(args.id_hex.strip())
    return int_to_bits(value, width)


def cmd_send(args) -> int:
    bits = _send_bits(args)
    modcfg = ModulationConfig(Scheme(args.scheme), bit_duration_s=args.bit_duration)
    schedule = modulate(bits, modcfg)
    if args.mode == "host":
        plan = loadgen.plan_from_schedule(schedule, os.cpu_count() or 2)
        report = loadgen.execute(plan)
        print(f"transmitted {len(bits)} bits in {report.duration_s:.2f} s "
              f"using {plan.worker_count} workers")
        return 0
    device, channel = _profiles(args)
    rate = required_sample_rate(modcfg)
    trace = sample_trace(_METRICS[args.metric], schedule, device, channel,
                         rate, schedule.total_duration_s)
    if args.realtime:
        _pace(schedule.total_duration_s)
    if args.out:
        write_trace_csv(trace, args.out)
        print(f"wrote {len(trace)} samples covering {schedule.total_duration_s:g} s to {args.out}")
    else:
        sys.stdout.write("\n".join(f"{v:.6f}" for v in trace.samples) + "\n")
    if args.plot:
        from .report import render_trace_figure

        render_trace_figure(trace, args.plot, title=f"{args.scheme.upper()} '{bits_to_str(bits)}'")
    return 0


def _pace(duration_s: float) -> None:
    end = time.monotonic() + duration_s
    while True:
        remaining = end - time.monotonic()
        if remaining <= 0:
            return
        time.sleep(min(remaining, 0.5))


def cmd_recv(args) -> int:
    modcfg = ModulationConfig(Scheme(args.scheme), bit_duration_s=args.bit_duration)
    if args.from_trace:
        trace = read_trace_csv(args.from_trace)
    else:
        rate = args.rate or required_sample_rate(modcfg)
        duration = args.expect * args.bit_duration
        trace = sysload.run_sampler(_METRICS[args.metric], rate, duration)
    baseline = trace.before_time(0.0)
    frame = trace.from_time(0.0)
    threshold = args.threshold
    if threshold is None:
        baseline_mean = float(baseline.samples.mean()) if len(baseline) else 0.0
        peak = float(frame.samples.max()) if len(frame) else 0.0
        threshold = ask_detection_threshold(baseline_mean, peak)
    demod = DemodConfig.from_modulation(modcfg, ask_threshold=threshold)
    bits = demodulate(frame, demod, expected_bits=args.expect)
    out = bits_to_str(bits)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    print(out)
    return 0


def cmd_trace(args) -> int:
    metric = _METRICS[args.metric]
    if args.mode == "host":
        trace = sysload.run_sampler(metric, args.rate, args.duration)
    else:
        device, channel = _profiles(args)
        trace = sample_trace(metric, EMPTY_SCHEDULE, device, channel,
                             args.rate, args.duration)
    if args.out:
        write_trace_csv(trace, args.out)
        print(f"wrote {len(trace)} samples to {args.out}")
    else:
        sys.stdout.write("\n".join(f"{t:.4f},{v:.6f}" for t, v in zip(trace.times, trace.samples)))
        sys.stdout.write("\n")
    if args.plot:
        from .report import render_trace_figure

        render_trace_figure(trace, args.plot)
    return 0


def cmd_bench(args) -> int:
    rates = tuple(float(r) for r in args.rates.split(",")) if args.rates else DEFAULT_RATE_GRID
    plan = BenchPlan(
        data_rates_bps=rates,
        scheme=Scheme(args.scheme),
        metric=_METRICS[args.metric],
        interference=Interference(args.interference),
        bits_per_trial=args.bits,
        trials_per_rate=args.trials,
        seed=args.seed if args.seed is not None else 0,
    )
    device, channel = _profiles(args)
    report = run_bench(plan, device=device, channel=channel)
    rendered = emit_report(report, format=args.format or "csv")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    else:
        sys.stdout.write(rendered)
    if args.plot:
        from .report import render_ber_figure

        render_ber_figure(report, args.plot)
    return 0


def cmd_associate(args) -> int:
    if not args.sim:
        print("only --sim mode is supported for associate", file=sys.stderr)
        return 1
    seed = args.seed if args.seed is not None else 0
    device, channel = _profiles(args)
    T = 1.0 / args.rate
    modcfg = ModulationConfig(Scheme(args.scheme), bit_duration_s=T)
    rendezvous = RendezvousSchedule(baseline_window_s=2 * T)
    options = FrameOptions()

    if args.registry_x and os.path.exists(args.registry_x):
        registry_x = VendorRegistry.load(args.registry_x, width=args.width)
    else:
        registry_x = VendorRegistry("vendorX", width=args.width, rng_seed=seed)
    if args.registry_y and os.path.exists(args.registry_y):
        registry_y = VendorRegistry.load(args.registry_y, width=args.width)
    else:
        registry_y = VendorRegistry("vendorY", width=args.width, rng_seed=seed + 1)

    tx_id = registry_x.allocate(args.identity, policy="random")
    rx_id = registry_y.allocate(f"reporter-{seed}", policy="random")

    medium = SimMedium(device, channel)
    tx_report = run_transmitter(tx_id, modcfg, rendezvous, medium, options)
    report = run_receiver(modcfg, rendezvous, args.width, medium,
                          _METRICS[args.metric], options)
    report.reporter_id = rx_id
    if report.detected_valid:
        report = match(report, registry_x)

    if args.registry_x:
        registry_x.save(args.registry_x)
    if args.registry_y:
        registry_y.save(args.registry_y)

    doc = {
        "airtime_s": tx_report.airtime_s,
        "rendezvous_s": tx_report.rendezvous_s,
        "transmitted_id_hex": tx_id.id_hex,
        "reporter_id_hex": rx_id.id_hex,
        "detected_id_bits": bits_to_str(report.detected_id_bits),
        "detected_valid": report.detected_valid,
        "matched_identity": report.matched.identity if report.matched else None,
    }
    if (args.format or "json") == "json":
        rendered = json.dumps(doc, indent=2) + "\n"
    else:
        rendered = (
            f"airtime: {doc['airtime_s']:g} s (simulated)\n"
            f"transmitted ID: {doc['transmitted_id_hex']}\n"
            f"detected valid: {doc['detected_valid']}\n"
            f"matched identity: {doc['matched_identity']}\n"
        )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    sys.stdout.write(rendered)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadlink",
        description="Covert communication over processor workload.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_send = sub.add_parser("send", help="transmit bits by driving processor workload")
    group = p_send.add_mutually_exclusive_group(required=True)
    group.add_argument("--bits", help="bit string, e.g. 101010")
    group.add_argument("--id-hex", help="payload as hex, e.g. 00a5f3")
    p_send.add_argument("--width", type=int, help="bit width when using --id-hex")
    p_send.add_argument("--scheme", choices=["ask", "fsk"], default="ask")
    p_send.add_argument("--bit-duration", type=float, default=4.0, metavar="T")
    p_send.add_argument("--mode", choices=["host", "sim"], default="sim")
    p_send.add_argument("--metric", choices=["time", "freq"], default="time")
    p_send.add_argument("--channel-config", dest="config", metavar="FILE")
    p_send.add_argument("--realtime", action="store_true",
                        help="pace the simulated transmission on the wall clock")
    p_send.add_argument("--plot", metavar="PATH", help="render the trace to a figure file")
    _add_common(p_send)
    p_send.set_defaults(func=cmd_send)

    p_recv = sub.add_parser("recv", help="demodulate a trace file or live sensing")
    p_recv.add_argument("--from-trace", metavar="FILE", help="read samples from a trace CSV")
    p_recv.add_argument("--scheme", choices=["ask", "fsk"], default="ask")
    p_recv.add_argument("--bit-duration", type=float, default=4.0, metavar="T")
    p_recv.add_argument("--expect", type=int, required=True, help="expected bit count")
    p_recv.add_argument("--threshold", type=float, help="fixed ASK detection threshold")
    p_recv.add_argument("--metric", choices=["time", "freq"], default="time")
    p_recv.add_argument("--rate", type=float, help="live sampling rate in Hz")
    _add_common(p_recv)
    p_recv.set_defaults(func=cmd_recv)

    p_trace = sub.add_parser("trace", help="dump raw workload samples")
    p_trace.add_argument("--mode", choices=["host", "sim"], default="host")
    p_trace.add_argument("--metric", choices=["time", "freq"], default="time")
    p_trace.add_argument("--rate", type=float, default=1.0)
    p_trace.add_argument("--duration", type=float, default=10.0)
    p_trace.add_argument("--interference", choices=["none", "media", "compress"])
    p_trace.add_argument("--plot", metavar="PATH")
    _add_common(p_trace)
    p_trace.set_defaults(func=cmd_trace)

    p_bench = sub.add_parser("bench", help="run the BER-versus-rate benchmark")
    p_bench.add_argument("--rates", help="comma-separated data rates in bps")
    p_bench.add_argument("--scheme", choices=["ask", "fsk"], default="ask")
    p_bench.add_argument("--metric", choices=["time", "freq"], default="time")
    p_bench.add_argument("--interference", choices=["none", "media", "compress"],
                         default="none")
    p_bench.add_argument("--bits", type=int, default=100, help="bits per trial")
    p_bench.add_argument("--trials", type=int, default=4, help="trials per rate")
    p_bench.add_argument("--plot", metavar="PATH", help="render the BER figure to a file")
    _add_common(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_assoc = sub.add_parser("associate", help="run the two-party association sim")
    p_assoc.add_argument("--width", type=int, default=48, choices=[8, 16, 32, 48],
                         help="installation ID width in bits")
    p_assoc.add_argument("--rate", type=float, default=0.25, help="data rate in bps")
    p_assoc.add_argument("--scheme", choices=["ask", "fsk"], default="ask")
    p_assoc.add_argument("--metric", choices=["time", "freq"], default="time")
    p_assoc.add_argument("--interference", choices=["none", "media", "compress"])
    p_assoc.add_argument("--sim", action="store_true", help="run in simulation (required)")
    p_assoc.add_argument("--identity", default="user@example.com",
                         help="identity registered for the transmitting installation")
    p_assoc.add_argument("--registry-x", metavar="FILE", help="vendor X registry JSON")
    p_assoc.add_argument("--registry-y", metavar="FILE", help="vendor Y registry JSON")
    _add_common(p_assoc)
    p_assoc.set_defaults(func=cmd_associate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LoadlinkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
