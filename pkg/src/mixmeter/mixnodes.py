"""Mix node state machines: threshold, pool, and exponential-delay strategies.

A node buffers messages and releases them according to its strategy.  Alongside
the mechanics, every egress carries a sender posterior: the probability
distribution over original senders as inferred by an observer who knows the
node's parameters and its full input schedule, but not its internal random
choices.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np

# sender id -> probability, always normalised
Provenance = Dict[int, float]


@dataclass(frozen=True)
class Message:
    """A single end-to-end message; `ingress_time` is when it entered the network."""

    id: int
    sender: int
    recipient: int
    ingress_time: float

    def __post_init__(self):
        if self.sender == self.recipient:
            raise ValueError("message sender and recipient must differ")


@dataclass(frozen=True)
class Threshold:
    """Flush the whole buffer once it holds `n` messages."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("threshold must be at least 1")


@dataclass(frozen=True)
class Pool:
    """Like Threshold, but retain `pool_count` randomly chosen messages at each flush."""

    n: int
    pool_count: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("pool trigger size must be at least 1")
        if not 0 <= self.pool_count < self.n:
            raise ValueError("pool_count must satisfy 0 <= pool_count < n")

    @property
    def retention_ratio(self) -> float:
        return self.pool_count / self.n


@dataclass(frozen=True)
class Poisson:
    """Delay every message independently by Exp(mean_delay) seconds."""

    mean_delay: float

    def __post_init__(self):
        if not self.mean_delay > 0:
            raise ValueError("mean delay must be positive")


MixStrategy = Union[Threshold, Pool, Poisson]


@dataclass(frozen=True)
class Egress:
    message: Message
    time: float
    posterior: Provenance


def _point_mass(sender: int) -> Provenance:
    return {sender: 1.0}


def _mixture(provenances: List[Provenance]) -> Provenance:
    """Uniform mixture of the given distributions."""
    out: Dict[int, float] = {}
    w = 1.0 / len(provenances)
    for dist in provenances:
        for sender, p in dist.items():
            out[sender] = out.get(sender, 0.0) + w * p
    return out


class MixNode:
    """One mix node; deterministic given its seed and input schedule.

    A Threshold strategy behaves exactly like a Pool with an empty pool, and is
    normalised to that internally so the two share one code path (and one RNG
    consumption pattern).  Corrupt nodes (honest=False) forward immediately in
    FIFO order and leave the sender posterior untouched.
    """

    def __init__(self, strategy: MixStrategy, *, honest: bool = True,
                 node_id: int = 0, seed: int = 0):
        self.strategy = strategy
        self.honest = honest
        self.node_id = node_id
        self.ingested = 0
        self.egressed = 0
        self._ids: set = set()
        self._buffer: List[tuple] = []          # (Message, Provenance)
        self._pending: List[tuple] = []         # heap of (egress_time, tiebreak, arrival, Message, Provenance)
        self._tiebreak = itertools.count()
        self.reseed(seed)

        if isinstance(strategy, Threshold):
            self._trigger, self._pool_count = strategy.n, 0
        elif isinstance(strategy, Pool):
            self._trigger, self._pool_count = strategy.n, strategy.pool_count
        elif isinstance(strategy, Poisson):
            self._trigger, self._pool_count = None, 0
        else:
            raise TypeError(f"unknown strategy {strategy!r}")

    def reseed(self, seed) -> None:
        """Reset the node's random stream (seed may be an int or a tuple)."""
        self.rng_seed = seed
        self.rng = np.random.default_rng(np.random.SeedSequence(seed))

    # ------------------------------------------------------------------ #

    @property
    def buffer_size(self) -> int:
        return len(self._buffer)

    @property
    def pending_size(self) -> int:
        return len(self._pending)

    def occupancy(self) -> int:
        """Messages currently held, whatever the strategy."""
        return len(self._buffer) + len(self._pending)

    def ingest(self, msg: Message, now: float,
               provenance: Optional[Provenance] = None) -> List[Egress]:
        """Accept one message at time `now`; return any egresses it triggers.

        `provenance` is the distribution the message carries from upstream hops
        (defaults to a point mass on its true sender).
        """
        if msg.id in self._ids:
            raise ValueError(f"message {msg.id} ingested twice at node {self.node_id}")
        self._ids.add(msg.id)
        self.ingested += 1
        prov = provenance if provenance is not None else _point_mass(msg.sender)

        if not self.honest:
            # corrupt node: no buffering, no mixing, no delay
            self.egressed += 1
            return [Egress(msg, now, prov)]

        if isinstance(self.strategy, Poisson):
            delay = self.rng.exponential(self.strategy.mean_delay)
            heapq.heappush(self._pending,
                           (now + delay, next(self._tiebreak), now, msg, prov))
            return []

        self._buffer.append((msg, prov))
        if len(self._buffer) == self._trigger:
            return self._flush(now)
        return []

    def _flush(self, now: float) -> List[Egress]:
        """Release n - pool_count messages, all sharing the batch posterior."""
        n = len(self._buffer)
        posterior = _mixture([prov for _, prov in self._buffer])
        keep = self._pool_count
        # random subset to egress, already in random order
        out_idx = self.rng.choice(n, size=n - keep, replace=False)
        out_set = set(out_idx.tolist())
        egresses = [Egress(self._buffer[i][0], now, posterior) for i in out_idx]
        # retained messages adopt the batch posterior as their new provenance
        self._buffer = [(m, posterior) for j, (m, _) in enumerate(self._buffer)
                        if j not in out_set]
        self.egressed += len(egresses)
        return egresses

    def batch_posterior(self) -> Provenance:
        """Posterior a flush of the current buffer would assign to each output."""
        if not self._buffer:
            raise ValueError("empty buffer has no batch posterior")
        return _mixture([prov for _, prov in self._buffer])

    # ------------------------------------------------------------------ #

    def pending_posterior(self, egress_time: float) -> Provenance:
        """Sender posterior for an egress observed at `egress_time` from a
        Poisson node, over the messages currently inside it.

        Each candidate is weighted by the exponential density of the delay it
        would imply; candidates that would need a negative delay get weight 0.
        """
        lam = self.strategy.mean_delay
        dists: List[Provenance] = []
        ws: List[float] = []
        for _, _, arrived, _msg, prov in self._pending:
            dt = egress_time - arrived    # delay at this node, not end to end
            if dt < 0:
                continue
            ws.append(math.exp(-dt / lam) / lam)
            dists.append(prov)
        total = sum(ws)
        if total <= 0.0:
            raise RuntimeError("no feasible input for observed egress; simulator bug")
        out: Dict[int, float] = {}
        for w, dist in zip(ws, dists):
            f = w / total
            for sender, p in dist.items():
                out[sender] = out.get(sender, 0.0) + f * p
        return out

    def pop_due(self, before: float) -> List[Egress]:
        """Release all pending messages whose scheduled time is < `before`,
        in schedule order, each with its density-weighted posterior."""
        out: List[Egress] = []
        while self._pending and self._pending[0][0] < before:
            te = self._pending[0][0]
            posterior = self.pending_posterior(te)
            _, _, _, msg, _ = heapq.heappop(self._pending)
            self.egressed += 1
            out.append(Egress(msg, te, posterior))
        return out

    # ------------------------------------------------------------------ #

    def drain(self) -> List[Message]:
        """Remove and return every message still held (end of run)."""
        residual = [m for m, _ in self._buffer]
        residual += [item[3] for item in sorted(self._pending)]
        self._buffer = []
        self._pending = []
        return residual
