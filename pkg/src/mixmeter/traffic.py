"""User population, link topology, and the virtual-time traffic simulator.

Time is event-indexed: it advances in whole seconds, each user sends with
probability r_i per second, and seconds without any transmission contribute no
events.  With the aggregate rate at 1 message/second this makes one observed
event roughly one ingress (plus the egresses it eventually causes).
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .mixnodes import Egress, Message, MixNode, Provenance
from .seeding import BURN_STREAM, NODE_STREAM, TRAFFIC_STREAM, derive_rng, seed_key

BURN_IN_BASE = 4096            # fixed warm-up, plus a random extension of 1..BURN_IN_JITTER
BURN_IN_JITTER = 4096


class TopologyError(ValueError):
    pass


@dataclass
class Population:
    """Users with per-second send rates and one persistent contact each."""

    rates: np.ndarray
    contacts: np.ndarray

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        self.contacts = np.asarray(self.contacts, dtype=int)
        n = len(self.rates)
        if n < 3:
            raise ValueError("population needs at least 3 users")
        if len(self.contacts) != n:
            raise ValueError("rates and contacts must have equal length")
        if np.any(self.rates < 0):
            raise ValueError("send rates must be non-negative")
        if float(self.rates.sum()) > 1.0 + 1e-9:
            raise ValueError("aggregate send rate must not exceed 1 message/second")
        if np.any(self.contacts == np.arange(n)):
            raise ValueError("no user may have itself as contact")

    @property
    def n_users(self) -> int:
        return len(self.rates)


def assign_contacts(n_users: int, rate, seed) -> Population:
    """Build a population with uniformly random contacts (never oneself).

    Contact choice is independent per user, so it is not reciprocal in
    general.  `rate` may be a scalar or a per-user sequence.
    """
    if n_users < 3:
        raise ValueError("population needs at least 3 users")
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed)
    contacts = np.empty(n_users, dtype=int)
    for u in range(n_users):
        c = int(rng.integers(n_users - 1))
        contacts[u] = c if c < u else c + 1
    rates = np.full(n_users, float(rate)) if np.isscalar(rate) else np.asarray(rate, float)
    return Population(rates=rates, contacts=contacts)


class Topology:
    """Mix nodes arranged in layers, plus the directed-link id map.

    Link ids are consecutive integers from 1: first one ingress link per
    sending user, then inter-layer node links, then one egress link per
    receiving user.  Id 0 is reserved for "no activity" in encodings, and the
    classification marker sits at vocab_size - 1, so a map with L links needs a
    vocabulary of L + 2 tokens.
    """

    def __init__(self, layers: List[List[MixNode]], senders: Sequence[int],
                 receivers: Sequence[int], *, allow_all_corrupt: bool = False):
        if not layers or any(not layer for layer in layers):
            raise TopologyError("topology needs at least one node per layer")
        # every possible route must include an honest node: demand one layer
        # where every node is honest (routes pick one node per layer).  The
        # escape hatch exists so experiments can measure the corrupt baseline.
        if not allow_all_corrupt and not any(all(node.honest for node in layer)
                                             for layer in layers):
            raise TopologyError("no fully honest layer: some route would see only corrupt nodes")
        self.layers = layers
        self.senders = list(senders)
        self.receivers = list(receivers)

        next_id = itertools.count(1)
        self.ingress_link: Dict[int, int] = {u: next(next_id) for u in self.senders}
        self.inter_link: Dict[Tuple[int, int], int] = {}
        for upstream, downstream in zip(layers, layers[1:]):
            for a in upstream:
                for b in downstream:
                    self.inter_link[(a.node_id, b.node_id)] = next(next_id)
        self.egress_link: Dict[int, int] = {u: next(next_id) for u in self.receivers}
        self.n_links = next(next_id) - 1
        self.vocab_size = self.n_links + 2
        self.cls_token_id = self.vocab_size - 1

    @classmethod
    def single_node(cls, node: MixNode, senders: Sequence[int],
                    receivers: Sequence[int], **kwargs) -> "Topology":
        return cls([[node]], senders, receivers, **kwargs)

    @property
    def nodes(self) -> List[MixNode]:
        return [node for layer in self.layers for node in layer]

    def link_map(self) -> dict:
        """JSON-friendly description of the link id assignment."""
        return {
            "ingress": {str(u): lid for u, lid in self.ingress_link.items()},
            "internode": {f"{a}->{b}": lid for (a, b), lid in self.inter_link.items()},
            "egress": {str(u): lid for u, lid in self.egress_link.items()},
        }


@dataclass
class MessageRecord:
    """Ground truth for one message."""

    id: int
    sender: int
    recipient: int
    sent: float
    delivered: Optional[float] = None


@dataclass
class DeliveryRecord:
    """Adversary-side summary of one delivery to a watched recipient."""

    message_id: int
    sender: int
    recipient: int
    time: float
    event_key: tuple                 # (time, layer, gen) of the egress event
    entropy: float
    suspect_probs: Optional[Tuple[float, float]] = None
    posterior: Optional[Provenance] = None


@dataclass
class Trace:
    """Sorted transmission events plus the ground-truth ledger of a run."""

    events: List[tuple]              # (time, layer, gen, link_id, message_id)
    ledger: Dict[int, MessageRecord]
    deliveries: List[DeliveryRecord]
    observation_time: Optional[float] = None
    observation_start: int = 0       # index of the first observation event

    def link_sequence(self, start: int = 0, count: Optional[int] = None) -> List[int]:
        stop = len(self.events) if count is None else start + count
        return [ev[3] for ev in self.events[start:stop]]

    def event_index(self, event_key: tuple) -> int:
        i = bisect.bisect_left(self.events, event_key)
        if i == len(self.events) or self.events[i][:3] != event_key:
            raise KeyError(f"event {event_key} not in trace")
        return i


def _entropy_bits(dist: Provenance) -> float:
    return -sum(p * math.log2(p) for p in dist.values() if p > 0.0)


class Simulation:
    """Drives traffic through a topology one virtual second at a time.

    Phases (burn-in, observation) are explicit method calls; node and traffic
    RNG streams all derive from the run seed, so a rerun with the same seed and
    schedule is byte-identical.
    """

    CHUNK = 512   # seconds of Bernoulli draws fetched per RNG call

    def __init__(self, topology: Topology, population: Population, seed, *,
                 watch: Iterable[int] = (), suspects: Optional[Tuple[int, int]] = None,
                 keep_posteriors: bool = False):
        self.topology = topology
        self.population = population
        self.watch = frozenset(watch)
        self.suspects = suspects
        self.keep_posteriors = keep_posteriors
        self._rng = derive_rng(seed, TRAFFIC_STREAM)
        for idx, node in enumerate(topology.nodes):
            node.reseed(seed_key(seed, NODE_STREAM, idx))
        self._t = 0
        self._gen = itertools.count()
        self._msg_ids = itertools.count()
        self._events: List[tuple] = []
        self._ledger: Dict[int, MessageRecord] = {}
        self._deliveries: List[DeliveryRecord] = []
        self._routes: Dict[int, List[MixNode]] = {}
        self._obs_time: Optional[float] = None
        self._obs_events = 0
        self._multi = any(len(layer) > 1 for layer in topology.layers)

    # ------------------------------------------------------------------ #

    @property
    def now(self) -> int:
        return self._t

    def mark_observation_start(self) -> float:
        self._obs_time = float(self._t)
        return self._obs_time

    def run_seconds(self, n_seconds: int, *, silent: Iterable[int] = (),
                    dest_override: Optional[Dict[int, int]] = None,
                    occupancy_log: Optional[List[int]] = None) -> None:
        """Advance the clock by n_seconds of Bernoulli traffic."""
        rates = self.population.rates.copy()
        silent = set(silent)
        if silent:
            rates[list(silent)] = -1.0   # a uniform draw can never fall below 0
        dest = dest_override or {}
        remaining = int(n_seconds)
        while remaining > 0:
            chunk = min(remaining, self.CHUNK)
            draws = self._rng.random((chunk, self.population.n_users))
            for row in draws:
                self._step_second(np.flatnonzero(row < rates), dest)
                if occupancy_log is not None:
                    occupancy_log.append(sum(nd.occupancy() for nd in self.topology.nodes))
            remaining -= chunk

    def run_until_observation_events(self, count: int, *, silent: Iterable[int] = (),
                                     dest_override: Optional[Dict[int, int]] = None) -> None:
        """Advance whole seconds until `count` events carry observation time."""
        if self._obs_time is None:
            raise RuntimeError("mark_observation_start must be called first")
        rates = self.population.rates.copy()
        silent = set(silent)
        if silent:
            rates[list(silent)] = -1.0
        dest = dest_override or {}
        while self._obs_events < count:
            draws = self._rng.random((self.CHUNK, self.population.n_users))
            for row in draws:
                self._step_second(np.flatnonzero(row < rates), dest)
                if self._obs_events >= count:
                    break

    # ------------------------------------------------------------------ #

    def _step_second(self, senders: np.ndarray, dest_override: Dict[int, int]) -> None:
        t = self._t
        # release exponential-delay egresses scheduled strictly before this second,
        # in global schedule order so downstream nodes see them in causal order
        while True:
            best = None
            best_layer = None
            for li, layer in enumerate(self.topology.layers):
                for node in layer:
                    if node._pending and node._pending[0][0] < t:
                        if best is None or node._pending[0][0] < best._pending[0][0]:
                            best, best_layer = node, li
            if best is None:
                break
            for egress in best.pop_due(best._pending[0][0] + 1e-12):
                self._handle_egress(best_layer, egress)

        for u in senders.tolist():
            recipient = dest_override.get(u, int(self.population.contacts[u]))
            msg = Message(id=next(self._msg_ids), sender=u, recipient=recipient,
                          ingress_time=float(t))
            self._ledger[msg.id] = MessageRecord(msg.id, u, recipient, float(t))
            route = self._pick_route(msg)
            self._routes[msg.id] = route
            self._event(float(t), 0, self.topology.ingress_link[u], msg.id)
            for egress in route[0].ingest(msg, float(t)):
                self._handle_egress(0, egress)
        self._t = t + 1

    def _pick_route(self, msg: Message) -> List[MixNode]:
        if not self._multi:
            return [layer[0] for layer in self.topology.layers]
        return [layer[int(self._rng.integers(len(layer)))] if len(layer) > 1 else layer[0]
                for layer in self.topology.layers]

    def _handle_egress(self, layer_idx: int, egress: Egress) -> None:
        msg = egress.message
        route = self._routes[msg.id]
        if layer_idx + 1 < len(route):
            nxt = route[layer_idx + 1]
            link = self.topology.inter_link[(route[layer_idx].node_id, nxt.node_id)]
            self._event(egress.time, layer_idx + 1, link, msg.id)
            for downstream in nxt.ingest(msg, egress.time, egress.posterior):
                self._handle_egress(layer_idx + 1, downstream)
            return
        key = self._event(egress.time, layer_idx + 1,
                          self.topology.egress_link[msg.recipient], msg.id)
        self._ledger[msg.id].delivered = egress.time
        del self._routes[msg.id]
        if msg.recipient in self.watch:
            probs = None
            if self.suspects is not None:
                a0, a1 = self.suspects
                probs = (egress.posterior.get(a0, 0.0), egress.posterior.get(a1, 0.0))
            self._deliveries.append(DeliveryRecord(
                message_id=msg.id, sender=msg.sender, recipient=msg.recipient,
                time=egress.time, event_key=key,
                entropy=_entropy_bits(egress.posterior), suspect_probs=probs,
                posterior=dict(egress.posterior) if self.keep_posteriors else None))

    def _event(self, time: float, layer: int, link: int, msg_id: int) -> tuple:
        key = (time, layer, next(self._gen))
        self._events.append(key + (link, msg_id))
        if self._obs_time is not None and time >= self._obs_time:
            self._obs_events += 1
        return key

    # ------------------------------------------------------------------ #

    def drain_all(self) -> List[Message]:
        residual: List[Message] = []
        for node in self.topology.nodes:
            residual.extend(node.drain())
        return residual

    def check_conservation(self) -> None:
        """Every ingested message is either egressed or still held."""
        for node in self.topology.nodes:
            if node.ingested != node.egressed + node.occupancy():
                raise AssertionError(f"node {node.node_id} leaks messages")

    def finish(self) -> Trace:
        """Sort events and freeze the run into a Trace."""
        self.check_conservation()
        events = sorted(self._events)
        start = 0
        if self._obs_time is not None:
            start = bisect.bisect_left(events, (self._obs_time, -1, -1))
        return Trace(events=events, ledger=self._ledger, deliveries=self._deliveries,
                     observation_time=self._obs_time, observation_start=start)


# ---------------------------------------------------------------------- #


def burn_in_duration(seed) -> int:
    """Warm-up length in seconds: a fixed base plus a random extension."""
    rng = derive_rng(seed, BURN_STREAM)
    return BURN_IN_BASE + int(rng.integers(1, BURN_IN_JITTER + 1))


def run_burn_in(topology: Topology, population: Population, seed, *,
                silent: Iterable[int] = (), occupancy_log: Optional[List[int]] = None
                ) -> Tuple[List[MixNode], int]:
    """Warm the topology with background traffic; suspects stay silent.

    Returns the warmed nodes and the number of seconds simulated.  The caller
    usually keeps simulating on the same node states afterwards.
    """
    duration = burn_in_duration(seed)
    sim = Simulation(topology, population, seed)
    sim.run_seconds(duration, silent=silent, occupancy_log=occupancy_log)
    return topology.nodes, duration


def simulate(topology: Topology, population: Population, duration: int, seed, *,
             silent: Iterable[int] = (), watch: Iterable[int] = (),
             burn_in: bool = True) -> Trace:
    """Run burn-in (optional) plus `duration` observed seconds and return the trace."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    sim = Simulation(topology, population, seed, watch=watch)
    if burn_in:
        sim.run_seconds(burn_in_duration(seed), silent=silent)
    sim.mark_observation_start()
    sim.run_seconds(duration, silent=silent)
    return sim.finish()


def latency_stats(trace: Trace, *, observed_only: bool = True) -> Tuple[float, float]:
    """Mean and standard deviation of end-to-end latency over delivered messages."""
    cut = trace.observation_time if (observed_only and trace.observation_time is not None) else -math.inf
    lat = [rec.delivered - rec.sent for rec in trace.ledger.values()
           if rec.delivered is not None and rec.delivered >= cut]
    if not lat:
        raise ValueError("no delivered messages in trace")
    arr = np.asarray(lat)
    return float(arr.mean()), float(arr.std())
