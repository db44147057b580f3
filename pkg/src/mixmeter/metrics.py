"""Privacy metrics over sender posteriors, and their aggregation.

Two per-message quantities: Shannon entropy of the sender posterior (bits),
and the absolute log-ratio of the two suspects' posterior probabilities
(natural log), with a small floor so a vanishing probability yields a large
but finite value instead of an infinity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .mixnodes import Message, MixNode, Poisson, Pool, Provenance, Threshold
from .seeding import ORACLE_STREAM, derive_rng

LIKELIHOOD_FLOOR = 1e-6
SIGNIFICANCE_LEVEL = 0.05


@dataclass(frozen=True)
class SenderPosterior:
    """Distribution over senders for one delivered message, as the adversary sees it."""

    message_id: int
    dist: Dict[int, float]


class DegenerateEvidence(ValueError):
    """Both suspect probabilities vanished; the sample carries no usable ratio."""


def _check_normalised(dist: Provenance) -> None:
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {total!r}, not 1")
    if any(p < 0 for p in dist.values()):
        raise ValueError("negative probability")


def entropy(posterior) -> float:
    """Shannon entropy in bits; 0 * log 0 counts as 0."""
    dist = posterior.dist if isinstance(posterior, SenderPosterior) else posterior
    _check_normalised(dist)
    return -sum(p * math.log2(p) for p in dist.values() if p > 0.0)


def likelihood_diff_pair(p0: float, p1: float, floor: float = LIKELIHOOD_FLOOR) -> float:
    """|ln p0 - ln p1| with each probability floored at `floor`."""
    if max(p0, floor) <= 0.0 and max(p1, floor) <= 0.0:
        raise DegenerateEvidence("both suspect probabilities are zero")
    return abs(math.log(max(p0, floor)) - math.log(max(p1, floor)))


def likelihood_diff(posterior, suspects: Tuple[int, int],
                    floor: float = LIKELIHOOD_FLOOR) -> float:
    """|ln p0 - ln p1| for the two suspects, with each p floored at `floor`."""
    dist = posterior.dist if isinstance(posterior, SenderPosterior) else posterior
    return likelihood_diff_pair(dist.get(suspects[0], 0.0),
                                dist.get(suspects[1], 0.0), floor)


# ---------------------------------------------------------------------- #
# aggregation


def welch_p_value(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Welch's t-test p-value, with degenerate groups handled explicitly."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each group needs at least 2 samples")
    if a.std() == 0.0 and b.std() == 0.0:
        return 1.0 if a.mean() == b.mean() else 0.0
    with warnings.catch_warnings():
        # near-identical groups trip scipy's catastrophic-cancellation warning
        # and can yield nan; fall back to the exact-equality convention
        warnings.simplefilter("ignore", RuntimeWarning)
        p = float(stats.ttest_ind(a, b, equal_var=False).pvalue)
    if math.isnan(p):
        return 1.0 if a.mean() == b.mean() else 0.0
    return p


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054
                    ) -> Tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return centre - half, centre + half


@dataclass
class MetricColumn:
    mean: float
    n: int
    stddev: float
    significant_vs_prev: Optional[bool] = None   # None for the first group


@dataclass
class ReportRow:
    group: object                                # e.g. observation length
    columns: Dict[str, MetricColumn]


@dataclass
class MetricsReport:
    rows: List[ReportRow] = field(default_factory=list)

    def column(self, name: str) -> List[MetricColumn]:
        return [row.columns[name] for row in self.rows]


def aggregate(groups: Sequence[Tuple[object, Dict[str, Sequence[float]]]],
              alpha: float = SIGNIFICANCE_LEVEL) -> MetricsReport:
    """Per-group means plus adjacent-group Welch tests.

    `groups` is an ordered sequence of (label, {metric: samples}).  Each metric
    present in consecutive groups is tested between them; a metric absent from
    a group simply breaks the chain there.
    """
    report = MetricsReport()
    prev: Dict[str, Sequence[float]] = {}
    for label, metric_samples in groups:
        row = ReportRow(group=label, columns={})
        for name, samples in metric_samples.items():
            arr = np.asarray(list(samples), float)
            if len(arr) < 2:
                raise ValueError(f"group {label!r} metric {name!r} has fewer than 2 samples")
            col = MetricColumn(mean=float(arr.mean()), n=len(arr), stddev=float(arr.std(ddof=1)))
            if name in prev:
                col.significant_vs_prev = welch_p_value(prev[name], arr) < alpha
            row.columns[name] = col
        report.rows.append(row)
        prev = {name: list(samples) for name, samples in metric_samples.items()}
    return report


# ---------------------------------------------------------------------- #
# simulation-based posterior oracle


def monte_carlo_posterior_oracle(strategy, senders: Sequence[int], observed,
                                 n_trials: int, seed) -> Dict[int, float]:
    """Estimate a sender posterior by replaying the node's random mechanics.

    For batch strategies (`Threshold`/`Pool`), `senders` lists the arrival
    senders in order and `observed = (flush_index, slot)` names one output
    position; the estimate is the frequency of each true sender occupying that
    slot across trials.  For `Poisson`, `senders` is a list of
    (sender, ingress_time) pairs, `observed = (egress_time, half_width)`, and
    each trial tallies which pending message lands within the window around
    the observed egress instant.

    Deliberately independent of the analytic recursion in `mixnodes`: it works
    on raw sender labels and fresh draws only.
    """
    if n_trials < 1000:
        raise ValueError("too few trials for a meaningful estimate")
    rng = derive_rng(seed, ORACLE_STREAM)
    if isinstance(strategy, (Threshold, Pool)):
        return _oracle_batch(strategy, list(senders), observed, n_trials, rng)
    if isinstance(strategy, Poisson):
        return _oracle_poisson(strategy, list(senders), observed, n_trials, rng)
    raise TypeError(f"unsupported strategy {strategy!r}")


def _oracle_batch(strategy, senders: List[int], observed: Tuple[int, int],
                  n_trials: int, rng: np.random.Generator) -> Dict[int, float]:
    n = strategy.n
    keep = strategy.pool_count if isinstance(strategy, Pool) else 0
    flush_index, slot = observed
    counts: Dict[int, int] = {}
    # one python loop per trial, but each trial is a handful of tiny draws
    for _ in range(n_trials):
        buffer: List[int] = []
        flushes_seen = 0
        hit = None
        for s in senders:
            buffer.append(s)
            if len(buffer) == n:
                order = rng.permutation(n)
                out = order[:n - keep]
                if flushes_seen == flush_index:
                    hit = buffer[out[slot]]
                    break
                buffer = [buffer[i] for i in sorted(order[n - keep:])]
                flushes_seen += 1
        if hit is None:
            raise ValueError("observed slot never fired; check the arrival schedule")
        counts[hit] = counts.get(hit, 0) + 1
    return {s: c / n_trials for s, c in counts.items()}


def _oracle_poisson(strategy: Poisson, arrivals: List[Tuple[int, float]],
                    observed: Tuple[float, float], n_trials: int,
                    rng: np.random.Generator) -> Dict[int, float]:
    te, half_width = observed
    senders = np.array([s for s, _ in arrivals])
    t_in = np.array([t for _, t in arrivals], float)
    if np.any(t_in > te):
        raise ValueError("arrival after the observed egress cannot be a candidate")
    delays = rng.exponential(strategy.mean_delay, size=(n_trials, len(arrivals)))
    egress = t_in[None, :] + delays
    hits = np.abs(egress - te) <= half_width
    tallies = hits.sum(axis=0)
    total = int(tallies.sum())
    if total == 0:
        raise ValueError("no trial landed in the observation window; widen it or add trials")
    out: Dict[int, float] = {}
    for s, c in zip(senders.tolist(), tallies.tolist()):
        out[s] = out.get(s, 0.0) + c / total
    return out
