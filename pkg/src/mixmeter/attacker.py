"""Bayesian log-odds baseline for the two-suspect sender game.

The attacker watches messages arriving at the target recipient, reads off the
ground-truth-aware sender posterior of each, and accumulates the log ratio of
the two suspects' probabilities.  The sign of the total decides the guess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .encoding import retained_span
from .metrics import LIKELIHOOD_FLOOR, wilson_interval
from .seeding import DECIDE_STREAM, MASK_STREAM, derive_rng


@dataclass(frozen=True)
class BeliefState:
    """Accumulated evidence; positive log-odds favour suspect 0."""

    log_odds: float = 0.0
    evidence_count: int = 0


def update(belief: BeliefState, p0: float, p1: float,
           eta: float = LIKELIHOOD_FLOOR) -> BeliefState:
    """Fold in one delivery whose posterior gives the suspects p0 and p1."""
    delta = math.log(p0 + eta) - math.log(p1 + eta)
    return BeliefState(log_odds=belief.log_odds + delta,
                       evidence_count=belief.evidence_count + 1)


def decide(belief: BeliefState, rng: np.random.Generator) -> int:
    """Guess the flipped bit: sign decides, an exactly balanced belief is a coin toss."""
    if belief.log_odds > 0.0:
        return 0
    if belief.log_odds < 0.0:
        return 1
    return int(rng.integers(2))


@dataclass
class RoundEvidence:
    """What the attacker may read from one game round's ledger."""

    label: int
    suspect_probs: List[Tuple[float, float]]   # per delivery to the recipient
    positions: List[int]                       # event position within the observation


def attack_round(evidence: RoundEvidence, rng: np.random.Generator, *,
                 span: Optional[Tuple[int, int]] = None,
                 eta: float = LIKELIHOOD_FLOOR) -> int:
    """Run the baseline over one round, optionally restricted to a retained span."""
    belief = BeliefState()
    for pos, (p0, p1) in zip(evidence.positions, evidence.suspect_probs):
        if span is not None:
            start, length = span
            if not start <= pos < start + length:
                continue
        belief = update(belief, p0, p1, eta)
    return decide(belief, rng)


@dataclass
class AccuracySample:
    correct: int
    n: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.n

    @property
    def ci95(self) -> Tuple[float, float]:
        return wilson_interval(self.correct, self.n)


def evaluate_rounds(rounds: Sequence[RoundEvidence], seq_length: int,
                    lengths: Iterable[int], seed,
                    eta: float = LIKELIHOOD_FLOOR) -> Dict[int, AccuracySample]:
    """Baseline accuracy per observation length over a set of rounds.

    Shorter lengths see the same rounds through a random contiguous retained
    region, drawn per (round, length) from the evaluation seed -- the same
    protocol the token-level masking uses.
    """
    out: Dict[int, AccuracySample] = {}
    for length in lengths:
        if length > seq_length:
            raise ValueError("evaluation length exceeds the observation length")
        correct = 0
        for idx, ev in enumerate(rounds):
            mask_rng = derive_rng(seed, MASK_STREAM, idx, length)
            span = retained_span(seq_length, length, mask_rng)
            guess_rng = derive_rng(seed, DECIDE_STREAM, idx, length)
            if attack_round(ev, guess_rng, span=span) == ev.label:
                correct += 1
        out[length] = AccuracySample(correct=correct, n=len(rounds))
    return out
