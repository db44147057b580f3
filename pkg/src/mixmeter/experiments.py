"""Round collection and evaluation drivers shared by the CLI and the tests.

A "length profile" evaluates one set of rounds at several observation lengths:
each shorter view keeps a uniformly placed contiguous region of the full
observation, exactly as the token-level masking does, and feeds the baseline
attacker plus the per-message metrics only the retained evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .attacker import AccuracySample, attack_round
from .encoding import retained_span
from .game import GameConfig, RoundRecord, generate_rounds
from .metrics import MetricsReport, aggregate, likelihood_diff_pair
from .seeding import DECIDE_STREAM, MASK_STREAM, derive_rng


def collect_rounds(config: GameConfig, n_rounds: int, master_seed) -> List[RoundRecord]:
    """Play n_rounds independent rounds and keep only their ledger records."""
    return [record for _, _, record in generate_rounds(config, n_rounds, master_seed)]


@dataclass
class LengthMetrics:
    """Evaluation of one observation length over a set of rounds."""

    length: int
    accuracy: AccuracySample
    eps_round_means: List[float]            # per-round mean likelihood difference
    entropy_suspect_means: List[float]      # per-round mean entropy, suspect-sent only
    entropy_all_means: List[float]          # per-round mean entropy, every delivery
    retained_suspect_counts: List[int]      # retained true-suspect deliveries per round

    @property
    def eps_mean(self) -> float:
        return float(np.mean(self.eps_round_means)) if self.eps_round_means else float("nan")

    @property
    def entropy_suspect_mean(self) -> float:
        return (float(np.mean(self.entropy_suspect_means))
                if self.entropy_suspect_means else float("nan"))

    @property
    def entropy_all_mean(self) -> float:
        return (float(np.mean(self.entropy_all_means))
                if self.entropy_all_means else float("nan"))

    @property
    def retained_suspect_mean(self) -> float:
        return float(np.mean(self.retained_suspect_counts))


def length_profile(records: Sequence[RoundRecord], seq_length: int,
                   lengths: Sequence[int], eval_seed) -> Dict[int, LengthMetrics]:
    """Mask, attack, and measure the same rounds at each observation length.

    The retained region for (round, length) is drawn from a stream keyed on
    exactly those two values, so the attacker and the metric samples always
    see the same region, and a rerun reproduces it.
    """
    out: Dict[int, LengthMetrics] = {}
    for length in lengths:
        if length > seq_length:
            raise ValueError("evaluation length exceeds the observation length")
        correct = 0
        eps_means: List[float] = []
        h_suspect: List[float] = []
        h_all: List[float] = []
        retained_counts: List[int] = []
        for idx, record in enumerate(records):
            span = retained_span(seq_length, length,
                                 derive_rng(eval_seed, MASK_STREAM, idx, length))
            lo, span_len = span
            kept = [d for d in record.deliveries if lo <= d.position < lo + span_len]

            guess_rng = derive_rng(eval_seed, DECIDE_STREAM, idx, length)
            guess = attack_round(record.evidence(), guess_rng, span=span)
            correct += guess == record.label

            if kept:
                eps = [likelihood_diff_pair(d.p0, d.p1) for d in kept]
                eps_means.append(float(np.mean(eps)))
                h_all.append(float(np.mean([d.entropy for d in kept])))
            suspect_kept = [d for d in kept if d.from_suspect]
            if suspect_kept:
                h_suspect.append(float(np.mean([d.entropy for d in suspect_kept])))
            retained_counts.append(len(suspect_kept))
        out[length] = LengthMetrics(
            length=length,
            accuracy=AccuracySample(correct=correct, n=len(records)),
            eps_round_means=eps_means,
            entropy_suspect_means=h_suspect,
            entropy_all_means=h_all,
            retained_suspect_counts=retained_counts)
    return out


def profile_report(profile: Dict[int, LengthMetrics]) -> MetricsReport:
    """Aggregate a length profile into report rows with adjacent-length tests."""
    groups = []
    for lm in profile.values():
        samples = {
            "accuracy": [1.0] * lm.accuracy.correct
                        + [0.0] * (lm.accuracy.n - lm.accuracy.correct),
            "likelihood_diff": lm.eps_round_means,
            "entropy_suspect": lm.entropy_suspect_means,
            "entropy_all": lm.entropy_all_means,
        }
        groups.append((lm.length, {k: v for k, v in samples.items() if len(v) >= 2}))
    return aggregate(groups)


# ---------------------------------------------------------------------- #
# sweep support


@dataclass
class SweepPoint:
    """Summary of one mix configuration at full observation length."""

    family: str                  # "threshold", "pool", or "poisson"
    param: float                 # n for batch mixes, mean delay for poisson
    pool_count: int
    accuracy: AccuracySample
    latency_mean: float
    latency_std: float
    eps_mean: float
    entropy_mean: float


def sweep_point(family: str, param: float, pool_count: int, config: GameConfig,
                n_rounds: int, master_seed, eval_seed) -> SweepPoint:
    records = collect_rounds(config, n_rounds, master_seed)
    full = length_profile(records, config.seq_length, [config.seq_length], eval_seed)
    profile = full[config.seq_length]
    lat = np.array([r.latency_mean for r in records], float)
    spread = np.array([r.latency_std for r in records], float)
    return SweepPoint(
        family=family, param=param, pool_count=pool_count,
        accuracy=profile.accuracy,
        latency_mean=float(np.nanmean(lat)),
        latency_std=float(np.nanmean(spread)),
        eps_mean=profile.eps_mean,
        entropy_mean=profile.entropy_all_mean)
