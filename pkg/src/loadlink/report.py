"""Figure rendering for benchmark reports and traces.

Figures are written to files next to the delimited output; matplotlib is
imported lazily with the Agg backend so headless runs never touch a
display.
"""

from __future__ import annotations

from .bench import BerReport
from .codec import WorkloadTrace


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def render_ber_figure(report: BerReport, path, title: str | None = None) -> None:
    """Error-bar plot of BER versus data rate (min/avg/max per rate)."""
    plt = _pyplot()
    rates = [s.rate_bps for s in report.summaries]
    avg = [s.ber_avg for s in report.summaries]
    lower = [s.ber_avg - s.ber_min for s in report.summaries]
    upper = [s.ber_max - s.ber_avg for s in report.summaries]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(rates, avg, yerr=[lower, upper], fmt="o-", capsize=4)
    ax.set_xscale("log")
    ax.set_xlabel("data rate (bps)")
    ax.set_ylabel("bit error rate")
    ax.set_ylim(bottom=-0.02)
    ax.grid(True, which="both", alpha=0.3)
    plan = report.plan
    ax.set_title(title or f"{plan.scheme.value.upper()}, {plan.metric.value}, "
                          f"interference={plan.interference.value}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace_figure(trace: WorkloadTrace, path, title: str | None = None) -> None:
    """Step plot of a sampled workload trace."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.step(trace.times, trace.samples, where="post", linewidth=1.0)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(trace.metric.value.replace("_", " "))
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
