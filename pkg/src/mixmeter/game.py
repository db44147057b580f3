"""The two-suspect sender game: challenger, rounds, and dataset assembly.

One round: pick two suspects and a recipient, flip a hidden bit, warm the
network with the suspects silent, then observe a fixed number of events while
the chosen suspect persistently messages the recipient and everyone else
behaves as background.  The adversary's job is to recover the bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .attacker import RoundEvidence
from .encoding import CANONICAL_LENGTHS, TokenSequence, encode, prepend_cls
from .mixnodes import MixNode, MixStrategy
from .seeding import GAME_STREAM, ROLE_STREAM, ROUND_STREAM, derive_rng, seed_key
from .traffic import (BURN_IN_BASE, BURN_IN_JITTER, Simulation, Topology,
                      assign_contacts)


@dataclass(frozen=True)
class GameConfig:
    """Experiment shape for one game configuration (single honest mix node)."""

    n_users: int
    send_rate: float
    strategy: MixStrategy
    seq_length: int = 4096
    strict_exclusive: bool = False   # forbid background traffic to the recipient
    fixed_roles: bool = False        # same suspects/recipient for every round

    def __post_init__(self):
        if self.n_users < 3:
            raise ValueError("the game needs at least 3 users")
        if self.send_rate <= 0:
            raise ValueError("send rate must be positive")
        if self.n_users * self.send_rate > 1.0 + 1e-9:
            raise ValueError("aggregate send rate must not exceed 1 message/second")
        if self.seq_length not in CANONICAL_LENGTHS:
            raise ValueError(f"observation length must be one of {CANONICAL_LENGTHS}")


@dataclass
class DeliverySummary:
    """One delivery to the recipient, as stored in the round ledger."""

    position: int          # event index within the observation window
    message_id: int
    sender: int
    from_suspect: bool
    p0: float
    p1: float
    entropy: float


@dataclass
class RoundRecord:
    """Ground truth and adversary-readable evidence for one round."""

    index: int
    seed_key: tuple
    label: int
    suspects: Tuple[int, int]
    recipient: int
    burn_in_seconds: int
    deliveries: List[DeliverySummary]
    suspect_messages: int            # deliveries from the true suspect in-window
    latency_mean: float
    latency_std: float

    def evidence(self) -> RoundEvidence:
        return RoundEvidence(
            label=self.label,
            suspect_probs=[(d.p0, d.p1) for d in self.deliveries],
            positions=[d.position for d in self.deliveries])


@dataclass
class GameInstance:
    """What one round hands to an adversary, plus the hidden bit."""

    suspects: Tuple[int, int]
    recipient: int
    b: int
    observation: TokenSequence


def _redraw_contact(rng: np.random.Generator, user: int, forbidden: set, n: int) -> int:
    """Uniform contact over users excluding `user` itself and `forbidden`."""
    while True:
        c = int(rng.integers(n))
        if c != user and c not in forbidden:
            return c


def play_round(config: GameConfig, seed, *,
               roles: Optional[Tuple[int, int, int]] = None,
               force_b: Optional[int] = None,
               keep_posteriors: bool = False) -> Tuple[GameInstance, RoundRecord, Simulation]:
    """Run one full round and return the instance, its ledger record, and the sim.

    `roles` fixes (suspect0, suspect1, recipient) instead of drawing them;
    `force_b` fixes the hidden bit.  Both exist for fixed-role datasets and for
    symmetry checks.
    """
    rng = derive_rng(seed, GAME_STREAM)
    n = config.n_users
    population = assign_contacts(n, config.send_rate, rng)

    if roles is None:
        a0, a1, recipient = (int(x) for x in rng.choice(n, size=3, replace=False))
    else:
        a0, a1, recipient = roles
        if len({a0, a1, recipient}) != 3:
            raise ValueError("suspects and recipient must be pairwise distinct")
    b = int(rng.integers(2)) if force_b is None else int(force_b)
    true_suspect = (a0, a1)[b]
    other_suspect = (a0, a1)[1 - b]

    # observation-phase contact fixes, all drawn in ascending-user order so the
    # stream is identical under a suspect swap
    dest_override: Dict[int, int] = {true_suspect: recipient}
    for u in range(n):
        if u == true_suspect:
            continue
        if u == other_suspect:
            if int(population.contacts[u]) == recipient:
                dest_override[u] = _redraw_contact(rng, u, {recipient}, n)
        elif config.strict_exclusive and int(population.contacts[u]) == recipient:
            dest_override[u] = _redraw_contact(rng, u, {recipient}, n)

    burn_seconds = BURN_IN_BASE + int(rng.integers(1, BURN_IN_JITTER + 1))

    node = MixNode(config.strategy, node_id=0)
    topology = Topology.single_node(node, senders=range(n), receivers=range(n))
    sim = Simulation(topology, population, seed, watch={recipient},
                     suspects=(a0, a1), keep_posteriors=keep_posteriors)
    sim.run_seconds(burn_seconds, silent={a0, a1})
    sim.mark_observation_start()
    sim.run_until_observation_events(config.seq_length, dest_override=dest_override)
    trace = sim.finish()

    observation = prepend_cls(encode(trace, (trace.observation_start, config.seq_length),
                                     topology.vocab_size))

    deliveries: List[DeliverySummary] = []
    for rec in trace.deliveries:
        pos = trace.event_index(rec.event_key) - trace.observation_start
        if not 0 <= pos < config.seq_length:
            continue
        deliveries.append(DeliverySummary(
            position=pos, message_id=rec.message_id, sender=rec.sender,
            from_suspect=rec.sender == true_suspect,
            p0=rec.suspect_probs[0], p1=rec.suspect_probs[1],
            entropy=rec.entropy))

    in_window = [r for r in trace.ledger.values()
                 if r.delivered is not None and r.delivered >= trace.observation_time]
    lat = (np.array([r.delivered - r.sent for r in in_window]) if in_window
           else np.array([float("nan")]))

    record = RoundRecord(
        index=0, seed_key=seed_key(seed), label=b, suspects=(a0, a1),
        recipient=recipient, burn_in_seconds=burn_seconds, deliveries=deliveries,
        suspect_messages=sum(d.from_suspect for d in deliveries),
        latency_mean=float(lat.mean()), latency_std=float(lat.std()))
    instance = GameInstance(suspects=(a0, a1), recipient=recipient, b=b,
                            observation=observation)
    return instance, record, sim


def score_adversary(guesses: Sequence[int], labels: Sequence[int]) -> float:
    """Fraction of rounds where the guess matches the hidden bit."""
    if len(guesses) != len(labels) or not guesses:
        raise ValueError("guesses and labels must be equal-length and non-empty")
    return sum(g == l for g, l in zip(guesses, labels)) / len(labels)


# ---------------------------------------------------------------------- #
# dataset assembly


SPLIT_NAMES = ("train", "validation", "test")


def split_sizes(n_samples: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ValueError("split ratios must be three non-negative numbers summing to 1")
    n_train = int(round(n_samples * ratios[0]))
    n_val = int(round(n_samples * ratios[1]))
    n_test = n_samples - n_train - n_val
    if n_test < 0:
        raise ValueError("split rounding produced a negative test split")
    return n_train, n_val, n_test


def generate_rounds(config: GameConfig, n_samples: int, master_seed):
    """Yield (index, GameInstance, RoundRecord) for n_samples independent rounds.

    Every round runs its own simulation under its own derived seed, so no two
    samples ever share traffic; splits built from disjoint index ranges are
    disjoint by construction.
    """
    if n_samples < 3:
        raise ValueError("need at least 3 samples to build a dataset")
    roles = None
    if config.fixed_roles:
        role_rng = derive_rng(master_seed, ROLE_STREAM)
        roles = tuple(int(x) for x in role_rng.choice(config.n_users, size=3, replace=False))
    for i in range(n_samples):
        round_seed = seed_key(master_seed, ROUND_STREAM, i)
        instance, record, _ = play_round(config, round_seed, roles=roles)
        record.index = i
        yield i, instance, record
