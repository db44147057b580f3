"""Rendering of metric tables and figures.

Every report lands as a CSV next to a PNG so results can be inspected by eye
and diffed by machine.  All figures use the Agg backend; nothing here needs a
display.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .experiments import LengthMetrics, SweepPoint  # noqa: E402
from .metrics import MetricsReport, wilson_interval  # noqa: E402


def write_metrics_csv(report: MetricsReport, path: Path) -> None:
    """One row per group; each metric contributes mean/n/stddev/significant columns."""
    path = Path(path)
    metric_names: List[str] = []
    for row in report.rows:
        for name in row.columns:
            if name not in metric_names:
                metric_names.append(name)
    header = ["group"]
    for name in metric_names:
        header += [f"{name}_mean", f"{name}_n", f"{name}_stddev", f"{name}_significant_vs_prev"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in report.rows:
            out = [row.group]
            for name in metric_names:
                col = row.columns.get(name)
                if col is None:
                    out += ["", "", "", ""]
                else:
                    flag = "" if col.significant_vs_prev is None else str(col.significant_vs_prev).lower()
                    out += [f"{col.mean:.10g}", col.n, f"{col.stddev:.10g}", flag]
            writer.writerow(out)


def write_length_profile_csv(profile: Dict[int, LengthMetrics], path: Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "length", "accuracy", "accuracy_ci_low", "accuracy_ci_high", "rounds",
            "eps_mean", "entropy_suspect_mean", "entropy_all_mean", "retained_suspect_mean",
        ])
        for length in sorted(profile):
            m = profile[length]
            lo, hi = wilson_interval(round(m.accuracy.correct), m.accuracy.n)
            writer.writerow([
                length, f"{m.accuracy.accuracy:.6f}", f"{lo:.6f}", f"{hi:.6f}", m.accuracy.n,
                f"{m.eps_mean:.6f}", f"{m.entropy_suspect_mean:.6f}",
                f"{m.entropy_all_mean:.6f}", f"{m.retained_suspect_mean:.6f}",
            ])


def length_profile_figure(profile: Dict[int, LengthMetrics], path: Path) -> None:
    """Attack accuracy (with 95% CI) and mean entropy against observed length."""
    lengths = sorted(profile)
    acc = [profile[n].accuracy.accuracy for n in lengths]
    err_lo, err_hi = [], []
    for n in lengths:
        sample = profile[n].accuracy
        lo, hi = sample.ci95
        err_lo.append(max(0.0, sample.accuracy - lo))
        err_hi.append(max(0.0, hi - sample.accuracy))
    entropy = [profile[n].entropy_suspect_mean for n in lengths]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(lengths, acc, yerr=[err_lo, err_hi], fmt="o-", capsize=3,
                color="tab:blue", label="attack accuracy")
    ax.axhline(0.5, color="grey", linestyle=":", linewidth=1)
    ax.set_xscale("log", base=2)
    ax.set_xticks(lengths)
    ax.set_xticklabels([str(n) for n in lengths])
    ax.set_xlabel("observed events")
    ax.set_ylabel("accuracy", color="tab:blue")
    ax.set_ylim(0.0, 1.05)

    ax2 = ax.twinx()
    ax2.plot(lengths, entropy, "s--", color="tab:red", label="suspect entropy (bits)")
    ax2.set_ylabel("mean entropy (bits)", color="tab:red")

    lines1, labels1 = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines1 + lines2, labels1 + labels2, loc="center right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_sweep_csv(points: Sequence[SweepPoint], path: Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "family", "param", "pool_count", "accuracy", "accuracy_ci_low",
            "accuracy_ci_high", "rounds", "latency_mean", "latency_std",
            "eps_mean", "entropy_mean",
        ])
        for p in points:
            lo, hi = p.accuracy.ci95
            writer.writerow([
                p.family, f"{p.param:g}", p.pool_count if p.pool_count is not None else "",
                f"{p.accuracy.accuracy:.6f}", f"{lo:.6f}", f"{hi:.6f}", p.accuracy.n,
                f"{p.latency_mean:.6f}", f"{p.latency_std:.6f}",
                f"{p.eps_mean:.6f}", f"{p.entropy_mean:.6f}",
            ])


def _family_groups(points: Sequence[SweepPoint]) -> Dict[str, List[SweepPoint]]:
    groups: Dict[str, List[SweepPoint]] = {}
    for p in points:
        key = p.family
        if p.family == "pool" and p.pool_count is not None:
            key = f"pool (retain {p.pool_count})"
        groups.setdefault(key, []).append(p)
    for grp in groups.values():
        grp.sort(key=lambda p: p.latency_mean)
    return groups


_MARKERS = {"threshold": "o", "poisson": "^"}


def accuracy_vs_latency_figure(points: Sequence[SweepPoint], path: Path) -> None:
    """The privacy/latency trade-off: one curve per strategy family."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, grp in sorted(_family_groups(points).items()):
        xs = [p.latency_mean for p in grp]
        ys = [p.accuracy.accuracy for p in grp]
        errs_lo, errs_hi = [], []
        for p in grp:
            lo, hi = p.accuracy.ci95
            errs_lo.append(max(0.0, p.accuracy.accuracy - lo))
            errs_hi.append(max(0.0, hi - p.accuracy.accuracy))
        marker = _MARKERS.get(grp[0].family, "s")
        ax.errorbar(xs, ys, yerr=[errs_lo, errs_hi], fmt=f"{marker}-", capsize=2,
                    markersize=4, label=label)
    ax.axhline(0.5, color="grey", linestyle=":", linewidth=1)
    ax.set_xlabel("mean latency (s)")
    ax.set_ylabel("attack accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def latency_profile_figure(points: Sequence[SweepPoint], path: Path) -> None:
    """Mean latency against the strategy parameter, one curve per family."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, grp in sorted(_family_groups(points).items()):
        ordered = sorted(grp, key=lambda p: p.param)
        xs = [p.param for p in ordered]
        ys = [p.latency_mean for p in ordered]
        yerr = [p.latency_std for p in ordered]
        marker = _MARKERS.get(ordered[0].family, "s")
        ax.errorbar(xs, ys, yerr=yerr, fmt=f"{marker}-", capsize=2, markersize=4,
                    label=label)
    ax.set_xlabel("strategy parameter (batch size or mean delay)")
    ax.set_ylabel("mean latency (s)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
