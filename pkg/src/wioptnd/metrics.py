"""Evaluation metrics computed from a simulation trace.

A spike counts as a misfire when it was never covered by a successful
same-slot discharge, whether because no stimulation targeted it (slot
clash or pattern mismatch) or because the capacitor lacked energy.
Spurious stimulations (pulses without a same-slot spike) are reported
alongside but excluded from the misfiring ratio, which normalizes by
spikes only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import SimTrace

# CSV column contract consumed by the sweep aggregator and plot exporter.
METRICS_CSV_COLUMNS = (
    "protocol", "spike_rate_hz", "n_patterns", "device_count", "seed",
    "n_mis", "n_covered", "n_spurious", "n_emissions", "total_spikes",
    "gamma_mis", "eta_stim_pct", "gamma_stim",
)


@dataclass(frozen=True)
class MetricsReport:
    """Counts and ratios for one run; ratios are NaN when there were no spikes."""

    n_mis: int
    n_covered: int
    n_spurious: int
    n_emissions: int
    total_spikes: int
    gamma_mis: float
    eta_stim_pct: float
    gamma_stim: float


def compute_metrics(trace: SimTrace) -> MetricsReport:
    """Count classifications from the per-slot log and derive the ratios."""
    n_mis = n_covered = n_spurious = n_emissions = 0
    for rec in trace.records:
        n_mis += len(rec.missed)
        n_covered += len(rec.covered)
        n_spurious += len(rec.spurious)
        if rec.emit is not None:
            n_emissions += 1
    total = n_mis + n_covered
    if total > 0:
        gamma_mis = n_mis / total
        eta_stim = 100.0 - 100.0 * gamma_mis
        gamma_stim = n_emissions / total
    else:
        gamma_mis = eta_stim = gamma_stim = math.nan
    return MetricsReport(n_mis, n_covered, n_spurious, n_emissions, total,
                         gamma_mis, eta_stim, gamma_stim)


@dataclass(frozen=True)
class AggregateStats:
    """Sample mean and n-1 standard deviation over replicate reports."""

    n: int
    mean_gamma_stim: float
    std_gamma_stim: float
    mean_eta_stim_pct: float
    std_eta_stim_pct: float
    std_is_sentinel: bool  # true when n == 1 and the 0.0 stds are placeholders


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate(reports: list[MetricsReport]) -> AggregateStats:
    """Aggregate one group of replicate reports."""
    if not reports:
        raise ValueError("need at least one report")
    mg, sg = _mean_std([r.gamma_stim for r in reports])
    me, se = _mean_std([r.eta_stim_pct for r in reports])
    return AggregateStats(len(reports), mg, sg, me, se,
                          std_is_sentinel=len(reports) == 1)


def aggregate_by(keyed_reports: list[tuple[tuple, MetricsReport]]
                 ) -> dict[tuple, AggregateStats]:
    """Group (key, report) pairs by key and aggregate each group.

    Keys keep their first-seen order so downstream CSV output is stable.
    """
    groups: dict[tuple, list[MetricsReport]] = {}
    for key, report in keyed_reports:
        groups.setdefault(key, []).append(report)
    return {key: aggregate(reports) for key, reports in groups.items()}


def metrics_csv_row(protocol: str, spike_rate_hz: float, n_patterns: int,
                    device_count: int, seed: int, report: MetricsReport) -> str:
    fields = [
        protocol, repr(float(spike_rate_hz)), str(n_patterns),
        str(device_count), str(seed), str(report.n_mis), str(report.n_covered),
        str(report.n_spurious), str(report.n_emissions),
        str(report.total_spikes), repr(report.gamma_mis),
        repr(report.eta_stim_pct), repr(report.gamma_stim),
    ]
    return ",".join(fields)
